import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root element");

const saved = window.localStorage.getItem("everlearn.supervisor") ?? undefined;
const app = new App(root, new ApiClient(""), { supervisor: saved });

app.refs.supervisor.addEventListener("input", () => {
  window.localStorage.setItem("everlearn.supervisor", app.refs.supervisor.value);
});

void app.init();
