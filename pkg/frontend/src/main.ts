import { ApiClient } from "./api.js";
import { createDashboard, DashboardKind } from "./dashboard.js";

const params = new URLSearchParams(window.location.search);
const kind: DashboardKind =
  params.get("dashboard") === "deposition" ? "deposition" : "concentration";

const root = document.getElementById("app");
if (root) {
  const dashboard = createDashboard(root, new ApiClient(""), { kind });
  void dashboard.init();
}
