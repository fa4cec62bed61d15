/** Test helper: spawn the rollout server and wait for its bound port. */

import { ChildProcess, spawn } from "node:child_process";

export interface ServerHandle {
  proc: ChildProcess;
  host: string;
  port: number;
  stop(): Promise<void>;
}

export async function startServer(extraArgs: string[] = []): Promise<ServerHandle> {
  const proc = spawn(
    "python3",
    ["-m", "envforge.cli", "serve", "--transport", "tcp:127.0.0.1:0", ...extraArgs],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const port = await new Promise<number>((resolve, reject) => {
    let out = "";
    let err = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const m = out.match(/listening on tcp:([^:]+):(\d+)/);
      if (m) resolve(Number(m[2]));
    });
    proc.stderr!.on("data", (chunk: Buffer) => {
      err += chunk.toString();
    });
    proc.once("exit", (code) => reject(new Error(`server exited ${code}: ${err}`)));
    setTimeout(() => reject(new Error(`server did not report a port: ${out} ${err}`)), 30_000);
  });
  return {
    proc,
    host: "127.0.0.1",
    port,
    stop: () =>
      new Promise<void>((resolve) => {
        proc.once("exit", () => resolve());
        proc.kill("SIGTERM");
        setTimeout(() => {
          proc.kill("SIGKILL");
          resolve();
        }, 5_000).unref();
      }),
  };
}
