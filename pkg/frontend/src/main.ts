/** Entry point: wire the controller to the DOM and a metrics poll loop. */

import { PrefApi } from "./api.js";
import { SessionController } from "./controller.js";
import { renderApp } from "./render.js";

const POLL_INTERVAL_MS = 2000;

function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("#app container missing");

  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "";
  const api = new PrefApi(base);
  const controller = new SessionController(api);

  controller.onChange((view) => renderApp(root, view, { onChoose: (l) => void controller.choose(l) }));

  const form = document.getElementById("session-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const dims = Number((document.getElementById("dims-input") as HTMLInputElement).value) || 2;
    void controller.start({ dims });
  });

  const resumeId = params.get("session");
  if (resumeId) void controller.resume(resumeId);

  window.setInterval(() => void controller.poll(), POLL_INTERVAL_MS);
}

boot();
