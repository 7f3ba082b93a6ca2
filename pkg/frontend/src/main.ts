import { createApiClient } from "./api.js";
import { createApp } from "./view.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// same-origin by default; set window.TBX_API for a remote server
const baseUrl = (window as unknown as { TBX_API?: string }).TBX_API ?? "";
const app = createApp(root, createApiClient(baseUrl));

void app.loadKeywords();
void app.submitQuery(""); // empty query lists every drawing
