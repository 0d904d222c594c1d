import { FacegenClient } from "./api";
import { App } from "./app";
import "./style.css";

const root = document.getElementById("app");
if (root) {
  const app = new App(root, new FacegenClient(""));
  // session id in the URL hash lets a reload reconstruct the same session
  const sessionId = window.location.hash.slice(1) || undefined;
  void app.start(sessionId).then(() => {
    if (app.sessionId) window.location.hash = app.sessionId;
  });
}
