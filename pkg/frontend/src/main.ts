// Application shell: hash router, login form, view mounting.

import { ApiClient } from "./api/client";
import { Session } from "./state/session";
import { dashboard } from "./views/dashboard";
import { deviceEditor } from "./views/deviceEditor";
import { clear, h } from "./views/dom";
import { mountEditor } from "./views/mountEditor";

export interface AppConfig {
  baseUrl: string;
}

export function createApp(root: HTMLElement, config: AppConfig) {
  const client = new ApiClient(config.baseUrl);
  const session = new Session(client);
  const outlet = h("main", { class: "outlet" });
  const status = h("span", { class: "session-status" }, "not signed in");
  const header = h(
    "header",
    { class: "topbar" },
    h("a", { href: "#/", class: "brand" }, "Sensor Registry"),
    status,
  );
  root.append(header, outlet);

  async function renderLogin(): Promise<void> {
    clear(outlet);
    const username = h("input", { name: "username", placeholder: "Username" });
    const password = h("input", { name: "password", type: "password", placeholder: "Password" });
    const error = h("p", { class: "form-error", hidden: true });
    outlet.append(
      h(
        "form",
        {
          class: "login-form",
          onSubmit: async (event: Event) => {
            event.preventDefault();
            try {
              await session.login(username.value, password.value);
              status.textContent = session.principal?.display_name ?? "signed in";
              window.location.hash = "#/";
            } catch {
              error.textContent = "Sign-in failed; check username and password.";
              error.hidden = false;
            }
          },
        },
        h("h2", {}, "Sign in"),
        error,
        username,
        password,
        h("button", { class: "primary", type: "submit" }, "Sign in"),
      ),
    );
  }

  async function route(): Promise<void> {
    session.noteNavigation();
    const hash = window.location.hash || "#/";
    clear(outlet);
    if (hash === "#/login") return renderLogin();
    if (hash === "#/" || hash === "") {
      const view = await dashboard(session);
      outlet.append(view.element);
      return;
    }
    const deviceMatch = hash.match(/^#\/devices\/(new|[^/]+)$/);
    if (deviceMatch) {
      const editor = await deviceEditor(session, deviceMatch[1] === "new" ? null : deviceMatch[1]);
      outlet.append(editor.element);
      return;
    }
    const mountMatch = hash.match(/^#\/configurations\/([^/]+)\/mounts$/);
    if (mountMatch) {
      const editor = await mountEditor(session, mountMatch[1]);
      outlet.append(editor.element);
      return;
    }
    outlet.append(h("p", {}, "Not found. ", h("a", { href: "#/" }, "Back to the dashboard")));
  }

  window.addEventListener("hashchange", () => void route());
  void route();
  return { client, session, route };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const base = (document.getElementById("app") as HTMLElement).dataset.apiBase ?? window.location.origin;
  createApp(document.getElementById("app") as HTMLElement, { baseUrl: base });
}
