// Deployment config: one JSON file next to the static assets.
// apiBase "" means same-origin (the service serving the console itself).

export interface ConsoleConfig {
  apiBase: string;
  pollMs: number;
}

const DEFAULTS: ConsoleConfig = { apiBase: "", pollMs: 5000 };

export async function loadConfig(): Promise<ConsoleConfig> {
  try {
    const resp = await fetch("./config.json");
    if (!resp.ok) return DEFAULTS;
    return { ...DEFAULTS, ...(await resp.json()) };
  } catch {
    return DEFAULTS;
  }
}
