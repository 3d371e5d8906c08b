import { Client } from "./api.js";
import { Console } from "./app.js";

// Entry point for the static page. The API base and an optional existing
// session id come from the query string:
//   index.html?api=http://127.0.0.1:8000&session=<id>
async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8000";
  const sessionId = params.get("session") ?? undefined;
  const root = document.getElementById("app");
  if (!root) throw new Error("page has no #app element");
  const app = new Console(root, new Client(base));
  await app.start(sessionId);
}

boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) root.textContent = `failed to start: ${String(err)}`;
});
