// Spawns the control service with five fixture scenes for integration tests.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readdirSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

export const PORT = Number(process.env.CTRL4D_TEST_PORT ?? 8917);
export const BASE_URL = `http://127.0.0.1:${PORT}`;

const PYTHON = process.env.CTRL4D_PYTHON ?? "python3";
const REPO_ROOT = resolve(__dirname, "..", "..", "..");

let server: ChildProcess | null = null;
let fixtureDir: string | null = null;

async function waitForHealth(timeoutMs = 90_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${BASE_URL}/v1/health`);
      if (r.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
  throw new Error(`service did not become healthy on ${BASE_URL}`);
}

export async function setup(): Promise<void> {
  fixtureDir = mkdtempSync(join(tmpdir(), "ctrl4d-fixtures-"));
  execFileSync(PYTHON, [
    join(REPO_ROOT, "scripts", "make_fixture_scenes.py"),
    fixtureDir,
    "5",
  ]);
  const scenes = readdirSync(fixtureDir).map((name) => join(fixtureDir!, name));
  server = spawn(
    PYTHON,
    ["-m", "ctrl4d.cli", "serve", ...scenes, "--port", String(PORT)],
    { stdio: ["ignore", "inherit", "inherit"] },
  );
  await waitForHealth();
}

export async function teardown(): Promise<void> {
  if (server && !server.killed) {
    server.kill("SIGTERM");
    await new Promise((resolve) => setTimeout(resolve, 300));
    if (server.exitCode === null) server.kill("SIGKILL");
  }
  if (fixtureDir) rmSync(fixtureDir, { recursive: true, force: true });
}
