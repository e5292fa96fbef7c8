import { createApp } from "./app.js";

// ?service=http://host:port points the page at a service on another origin;
// with no override the page assumes it is served by the service host itself.
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
createApp(root, { baseUrl });
