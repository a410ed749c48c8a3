/** Boots a real stub-backed `promptloom serve` process for the UI tests.
 *
 * Seeds the library with a slot-0 prompt whose template frames the input
 * (so runs always produce spans) and publishes one hub entry that is then
 * deleted locally, so copy-to-library has something new to pull.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdirSync, mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

const PYTHON = process.env.PROMPTLOOM_PYTHON ?? "python3";

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.once("error", reject);
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port assigned"));
      }
    });
  });
}

async function waitForServer(baseUrl: string, child: ChildProcess): Promise<void> {
  const deadline = Date.now() + 60_000;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`server exited early with code ${child.exitCode}`);
    }
    try {
      const response = await fetch(`${baseUrl}/local/models`);
      if (response.ok) return;
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`server did not come up: ${String(lastError)}`);
}

async function post(baseUrl: string, path: string, body: unknown): Promise<any> {
  const response = await fetch(baseUrl + path, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok) {
    throw new Error(`${path} -> ${response.status}: ${await response.text()}`);
  }
  return response.json();
}

export default async function setup({ provide }: { provide: (key: string, value: string) => void }) {
  const root = mkdtempSync(join(tmpdir(), "promptloom-ui-"));
  const libraryRoot = join(root, "library");
  const port = await freePort();
  const baseUrl = `http://127.0.0.1:${port}`;

  mkdirSync(libraryRoot, { recursive: true });
  writeFileSync(
    join(libraryRoot, "config.json"),
    JSON.stringify({
      default_model: "stub",
      models: [{ model_id: "stub", endpoint_kind: "scripted_stub", stub_mode: "echo" }],
    }),
  );

  const child = spawn(
    PYTHON,
    [
      "-m",
      "promptloom",
      "--library-root",
      libraryRoot,
      "serve",
      "--port",
      String(port),
      "--with-hub",
      "--hub-url",
      baseUrl,
      "--log-level",
      "warning",
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const stderr: Buffer[] = [];
  child.stderr?.on("data", (chunk: Buffer) => stderr.push(chunk));

  try {
    await waitForServer(baseUrl, child);

    // slot-0 prompt: echo stub + framing template, so output always differs
    const framed = await post(baseUrl, "/local/library/prompts", {
      title: "Frame input",
      icon: "🧪",
      template: "A {{text}} Z",
      description: "Frames the input between markers.",
      tags: ["demo"],
    });
    await fetch(`${baseUrl}/local/library/slots/0`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ id: framed.id }),
    });

    // hub-only entry for the deep-link viewer + copy-to-library flow
    const hubSeed = await post(baseUrl, "/local/library/prompts", {
      title: "Translate politely",
      icon: "🌐",
      template: "Translate politely: {{text}}",
      description: "Keeps a courteous tone while translating.",
      tags: ["translation", "tone"],
      recommended_models: ["stub"],
    });
    const shared = await post(baseUrl, "/local/hub/share", { id: hubSeed.id });
    await fetch(`${baseUrl}/local/library/prompts/${hubSeed.id}`, { method: "DELETE" });

    provide("baseUrl", baseUrl);
    provide("hubPromptId", shared.id);
    provide("slotPromptId", framed.id);
  } catch (error) {
    child.kill("SIGTERM");
    console.error(Buffer.concat(stderr).toString());
    rmSync(root, { recursive: true, force: true });
    throw error;
  }

  return async () => {
    child.kill("SIGTERM");
    await new Promise((resolve) => {
      child.once("exit", resolve);
      setTimeout(resolve, 5000);
    });
    rmSync(root, { recursive: true, force: true });
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    baseUrl: string;
    hubPromptId: string;
    slotPromptId: string;
  }
}
