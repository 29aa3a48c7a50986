// Page wiring: annotator card with y/n/u keyboard shortcuts, plus the
// coordinator dashboard that polls /api/progress and /api/results.

import { Answer, Client, TaskView } from "./api.js";
import { formatProgress, resultRow } from "./format.js";
import { KeyValueStore, SubmitQueue, memoryStore } from "./queue.js";
import { Session, SessionView, loadHandle, saveHandle } from "./session.js";

const POLL_MS = 3000;

function browserStore(): KeyValueStore {
  try {
    window.localStorage.setItem("sensery.probe", "1");
    return window.localStorage;
  } catch {
    return memoryStore(); // private browsing etc.; handle lasts one page life
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class DomView implements SessionView {
  showTask(task: TaskView): void {
    el("card").hidden = false;
    el("done").hidden = true;
    el<HTMLElement>("phrase").textContent = task.phrase;
    el<HTMLElement>("question").textContent = task.question;
    el<HTMLElement>("sense-badge").textContent = task.sense;
  }

  showDone(answeredCount: number): void {
    el("card").hidden = true;
    el("done").hidden = false;
    el<HTMLElement>("done-count").textContent = String(answeredCount);
  }

  showError(message: string): void {
    const banner = el("error-banner");
    banner.hidden = false;
    banner.textContent = message;
  }

  clearError(): void {
    el("error-banner").hidden = true;
  }
}

function startAnnotating(store: KeyValueStore, handle: string): void {
  saveHandle(store, handle);
  el("login").hidden = true;
  el("annotate").hidden = false;
  el<HTMLElement>("whoami").textContent = handle;

  const client = new Client("");
  const session = new Session(client, new SubmitQueue(store), new DomView(), handle);

  const answerOf: { [key: string]: Answer } = { y: "yes", n: "no", u: "notsure" };
  document.addEventListener("keydown", (ev) => {
    if (ev.ctrlKey || ev.altKey || ev.metaKey) return;
    const answer = answerOf[ev.key.toLowerCase()];
    if (answer && !el("card").hidden) void session.answer(answer);
  });
  for (const answer of ["yes", "no", "notsure"] as Answer[]) {
    el(`btn-${answer}`).addEventListener("click", () => void session.answer(answer));
  }
  el("retry").addEventListener("click", () => void session.advance());

  void session.start();
}

function renderDashboard(client: Client): void {
  const refresh = async () => {
    try {
      const [progress, results] = await Promise.all([client.progress(), client.results()]);
      const rows: string[] = [];
      for (const sense of Object.keys(progress).sort()) {
        const r = results.per_sense[sense];
        const row = r
          ? resultRow(sense, r)
          : { sense, majorityYes: "—", kappa: "κ undefined", notsure: "0", complete: "0" };
        rows.push(
          `<tr><td>${sense}</td><td>${formatProgress(progress[sense])}</td>` +
            `<td>${row.majorityYes}</td><td>${row.kappa}</td><td>${row.notsure}</td></tr>`
        );
      }
      el("dash-rows").innerHTML = rows.join("");
      el("dash-error").hidden = true;
    } catch {
      el("dash-error").hidden = false; // partial/stale data stays on screen
    }
  };
  void refresh();
  window.setInterval(refresh, POLL_MS);
}

function init(): void {
  const store = browserStore();

  el("tab-annotate").addEventListener("click", () => {
    el("view-annotate").hidden = false;
    el("view-dashboard").hidden = true;
  });
  el("tab-dashboard").addEventListener("click", () => {
    el("view-annotate").hidden = true;
    el("view-dashboard").hidden = false;
  });

  const saved = loadHandle(store);
  if (saved) {
    el<HTMLInputElement>("handle").value = saved;
  }
  el("login-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const handle = el<HTMLInputElement>("handle").value.trim();
    if (handle) startAnnotating(store, handle);
  });

  renderDashboard(new Client(""));
}

document.addEventListener("DOMContentLoaded", init);
