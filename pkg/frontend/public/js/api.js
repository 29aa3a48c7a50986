// Thin typed client for the annotation service JSON API. Every number the
// UI shows comes out of these payloads; nothing is recomputed client-side.
export const ANSWERS = ["yes", "no", "notsure"];
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
export class Client {
    constructor(base = "") {
        this.base = base;
    }
    // null means the queue is exhausted for this annotator (HTTP 204)
    async nextTask(annotator) {
        const res = await fetch(`${this.base}/api/tasks/next?annotator=${encodeURIComponent(annotator)}`);
        if (res.status === 204)
            return null;
        if (!res.ok)
            throw new ApiError(res.status, await res.text());
        return (await res.json());
    }
    // 409 (someone already answered as this handle) is an expected outcome,
    // not an error: the caller just moves on without double-counting.
    async submit(taskId, annotator, answer) {
        const res = await fetch(`${this.base}/api/responses`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ task_id: taskId, annotator, answer }),
        });
        if (res.status === 201)
            return "recorded";
        if (res.status === 409)
            return "duplicate";
        throw new ApiError(res.status, await res.text());
    }
    async progress() {
        const res = await fetch(`${this.base}/api/progress`);
        if (!res.ok)
            throw new ApiError(res.status, await res.text());
        return await res.json();
    }
    async results() {
        const res = await fetch(`${this.base}/api/results`);
        if (!res.ok)
            throw new ApiError(res.status, await res.text());
        return await res.json();
    }
}
