// Annotator session: holds at most one pending task, pushes answers to the
// service, and survives network failures by parking submissions in the
// offline queue. The DOM only ever sees this through the SessionView
// interface, which keeps the state machine testable without a browser.
import { ApiError } from "./api.js";
const HANDLE_KEY = "sensery.annotator";
export function loadHandle(store) {
    return store.getItem(HANDLE_KEY);
}
export function saveHandle(store, handle) {
    store.setItem(HANDLE_KEY, handle);
}
export class Session {
    constructor(client, queue, view, annotator) {
        this.client = client;
        this.queue = queue;
        this.view = view;
        this.annotator = annotator;
        this.pending = null;
        this.answeredCount = 0;
        this.busy = false;
    }
    async start() {
        await this.queue.flush(this.client).catch(() => 0);
        await this.advance();
    }
    async advance() {
        try {
            const task = await this.client.nextTask(this.annotator);
            this.view.clearError();
            if (task === null) {
                this.pending = null;
                this.view.showDone(this.answeredCount);
            }
            else {
                this.pending = task;
                this.view.showTask(task);
            }
        }
        catch (err) {
            // network trouble or a 5xx: keep whatever task we had and let the
            // annotator retry without losing their place
            this.view.showError("Could not reach the annotation service — retrying keeps your place.");
        }
    }
    // One answer per pending task; double-clicks are suppressed while a
    // submission is in flight.
    async answer(answer) {
        if (this.pending === null || this.busy)
            return;
        const task = this.pending;
        this.busy = true;
        try {
            const outcome = await this.client.submit(task.task_id, this.annotator, answer);
            if (outcome === "recorded") {
                this.answeredCount += 1;
            }
            // "duplicate" (409) means this handle already answered the task in an
            // earlier session; skip forward without double-counting
            this.pending = null;
            await this.advance();
        }
        catch (err) {
            if (err instanceof ApiError && err.status === 400) {
                // the UI can only emit the three legal answers, so a 400 means the
                // client and service disagree about the protocol
                this.view.showError("Version skew: the service rejected a legal answer. Please report this.");
            }
            else {
                // offline: journal it locally and move on; the queue flushes on the
                // next successful contact
                this.queue.push({ task_id: task.task_id, annotator: this.annotator, answer });
                this.answeredCount += 1;
                this.pending = null;
                await this.advance();
            }
        }
        finally {
            this.busy = false;
        }
    }
}
