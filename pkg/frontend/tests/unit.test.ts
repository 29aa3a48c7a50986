// Unit tests against the compiled modules, with fetch stubbed out.

import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, Client } from "../public/js/api.js";
import { formatKappa, formatPct, formatProgress, resultRow } from "../public/js/format.js";
import { SubmitQueue, memoryStore } from "../public/js/queue.js";
import { Session, loadHandle, saveHandle } from "../public/js/session.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => vi.unstubAllGlobals());

describe("Client", () => {
  it("parses a task payload", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      jsonResponse(200, {
        task_id: "olfactible-00000",
        phrase: "burning rubber",
        sense: "olfactible",
        question: "Is this something you can smell?",
      })
    ));
    const task = await new Client("").nextTask("w1");
    expect(task?.phrase).toBe("burning rubber");
    expect(task?.question).toMatch(/smell/);
    const url = (fetch as ReturnType<typeof vi.fn>).mock.calls[0][0] as string;
    expect(url).toBe("/api/tasks/next?annotator=w1");
  });

  it("maps 204 to null (queue exhausted)", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => new Response(null, { status: 204 })));
    expect(await new Client("").nextTask("w1")).toBeNull();
  });

  it("encodes the annotator handle", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => new Response(null, { status: 204 })));
    await new Client("").nextTask("a b&c");
    const url = (fetch as ReturnType<typeof vi.fn>).mock.calls[0][0] as string;
    expect(url).toContain("annotator=a%20b%26c");
  });

  it("treats 201 as recorded and 409 as duplicate", async () => {
    const statuses = [201, 409];
    vi.stubGlobal("fetch", vi.fn(async () =>
      jsonResponse(statuses.shift() as number, {})
    ));
    const client = new Client("");
    expect(await client.submit("t", "w", "yes")).toBe("recorded");
    expect(await client.submit("t", "w", "yes")).toBe("duplicate");
  });

  it("throws ApiError with the status for other codes", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse(400, { error: "nope" })));
    await expect(new Client("").submit("t", "w", "yes")).rejects.toMatchObject({
      status: 400,
    });
  });
});

describe("formatting", () => {
  it("renders percentages and dashes", () => {
    expect(formatPct(73.4)).toBe("73.4%");
    expect(formatPct(null)).toBe("—");
  });

  it("renders kappa with an explicit undefined badge", () => {
    expect(formatKappa(0.51)).toBe("0.51");
    expect(formatKappa(null)).toBe("κ undefined");
  });

  it("summarizes progress", () => {
    expect(
      formatProgress({ total: 500, complete: 12, incomplete: 488, responses: 40 })
    ).toBe("12/500 complete (40 responses)");
  });

  it("builds a dashboard row from service numbers", () => {
    const row = resultRow("audible", {
      complete: 500,
      notsure: 27,
      majority_yes_pct: 73.4,
      fleiss_kappa: 0.51,
    });
    expect(row).toEqual({
      sense: "audible",
      majorityYes: "73.4%",
      kappa: "0.51",
      notsure: "27",
      complete: "500",
    });
  });
});

describe("SubmitQueue", () => {
  it("persists and flushes in order", async () => {
    const store = memoryStore();
    const queue = new SubmitQueue(store);
    queue.push({ task_id: "t1", annotator: "w", answer: "yes" });
    queue.push({ task_id: "t2", annotator: "w", answer: "no" });
    const sent: string[] = [];
    const client = {
      submit: async (taskId: string) => {
        sent.push(taskId);
        return "recorded" as const;
      },
    };
    expect(await queue.flush(client as never)).toBe(2);
    expect(sent).toEqual(["t1", "t2"]);
    expect(queue.pending()).toEqual([]);
  });

  it("keeps the remainder when the network fails mid-flush", async () => {
    const queue = new SubmitQueue(memoryStore());
    queue.push({ task_id: "t1", annotator: "w", answer: "yes" });
    queue.push({ task_id: "t2", annotator: "w", answer: "yes" });
    let calls = 0;
    const client = {
      submit: async () => {
        if (++calls > 1) throw new TypeError("offline");
        return "recorded" as const;
      },
    };
    expect(await queue.flush(client as never)).toBe(1);
    expect(queue.pending().map((p) => p.task_id)).toEqual(["t2"]);
  });

  it("survives corrupted storage", () => {
    const store = memoryStore();
    store.setItem("sensery.pendingSubmits", "{not json");
    expect(new SubmitQueue(store).pending()).toEqual([]);
  });
});

function fakeView() {
  return {
    tasks: [] as string[],
    done: -1,
    errors: [] as string[],
    showTask(t: { phrase: string }) {
      this.tasks.push(t.phrase);
    },
    showDone(n: number) {
      this.done = n;
    },
    showError(msg: string) {
      this.errors.push(msg);
    },
    clearError() {},
  };
}

describe("Session", () => {
  it("advances through tasks and counts answers", async () => {
    const feed = [
      jsonResponse(200, { task_id: "t1", phrase: "snoring", sense: "audible", question: "q" }),
      jsonResponse(201, {}),
      jsonResponse(200, { task_id: "t2", phrase: "citrus", sense: "olfactible", question: "q" }),
      jsonResponse(201, {}),
      new Response(null, { status: 204 }),
    ];
    vi.stubGlobal("fetch", vi.fn(async () => feed.shift() as Response));
    const view = fakeView();
    const session = new Session(new Client(""), new SubmitQueue(memoryStore()), view as never, "w1");
    await session.start();
    await session.answer("yes");
    await session.answer("no");
    expect(view.tasks).toEqual(["snoring", "citrus"]);
    expect(view.done).toBe(2);
    expect(session.answeredCount).toBe(2);
  });

  it("skips forward on 409 without double-counting", async () => {
    const feed = [
      jsonResponse(200, { task_id: "t1", phrase: "gunshots", sense: "audible", question: "q" }),
      jsonResponse(409, { error: "already answered" }),
      new Response(null, { status: 204 }),
    ];
    vi.stubGlobal("fetch", vi.fn(async () => feed.shift() as Response));
    const view = fakeView();
    const session = new Session(new Client(""), new SubmitQueue(memoryStore()), view as never, "w1");
    await session.start();
    await session.answer("yes");
    expect(session.answeredCount).toBe(0);
    expect(view.done).toBe(0);
  });

  it("queues the answer and reports an error banner when offline", async () => {
    let calls = 0;
    vi.stubGlobal("fetch", vi.fn(async () => {
      calls += 1;
      if (calls === 1) {
        return jsonResponse(200, { task_id: "t1", phrase: "fresh paint", sense: "olfactible", question: "q" });
      }
      throw new TypeError("network down");
    }));
    const queue = new SubmitQueue(memoryStore());
    const view = fakeView();
    const session = new Session(new Client(""), queue, view as never, "w1");
    await session.start();
    await session.answer("notsure");
    expect(queue.pending()).toEqual([
      { task_id: "t1", annotator: "w1", answer: "notsure" },
    ]);
    expect(session.answeredCount).toBe(1);
    expect(view.errors.length).toBeGreaterThan(0);
  });

  it("surfaces 400 as version skew and keeps the task", async () => {
    const feed = [
      jsonResponse(200, { task_id: "t1", phrase: "chlorine", sense: "olfactible", question: "q" }),
      jsonResponse(400, { error: "unknown answer" }),
    ];
    vi.stubGlobal("fetch", vi.fn(async () => feed.shift() as Response));
    const view = fakeView();
    const session = new Session(new Client(""), new SubmitQueue(memoryStore()), view as never, "w1");
    await session.start();
    await session.answer("yes");
    expect(view.errors[0]).toMatch(/Version skew/);
    expect(session.pending?.task_id).toBe("t1");
  });

  it("keeps the error banner and state on fetch failure", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("down");
    }));
    const view = fakeView();
    const session = new Session(new Client(""), new SubmitQueue(memoryStore()), view as never, "w1");
    await session.start();
    expect(view.errors.length).toBe(1);
    expect(view.done).toBe(-1);
  });
});

describe("handle persistence", () => {
  it("round-trips through the store", () => {
    const store = memoryStore();
    expect(loadHandle(store)).toBeNull();
    saveHandle(store, "worker-7");
    expect(loadHandle(store)).toBe("worker-7");
  });
});
