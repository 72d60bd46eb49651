/**
 * Browser entry point. The API base URL comes from the `api` query
 * parameter, falling back to the service's default local port.
 */

import { mountApp } from "./app.js";

const DEFAULT_API = "http://127.0.0.1:8787";

const root = document.getElementById("root");
if (root === null) {
  throw new Error("missing #root element");
}
const params = new URLSearchParams(window.location.search);
mountApp(root, params.get("api") ?? DEFAULT_API);
