/**
 * Example: replay a trajectory JSONL policy log against a live server.
 *
 *   node dist/replay.js <host:port> <trajectories.jsonl>
 *
 * Re-issues each logged raw response in order and reports whether the
 * replayed episodes reproduce the logged rewards.
 */

import * as fs from "node:fs";

import { EnvforgeClient } from "./client.js";

interface LoggedStep {
  t: number;
  action_raw: string;
  reward: number;
  done: boolean;
  truncated: boolean;
}

interface LoggedTrajectory {
  env: string;
  seed: number;
  config: { thinking_required: boolean };
  steps: LoggedStep[];
  success: boolean;
  total_reward: number;
}

async function main(): Promise<number> {
  const [addr, path] = process.argv.slice(2);
  if (!addr || !path) {
    console.error("usage: replay <host:port> <trajectories.jsonl>");
    return 2;
  }
  const [host, portText] = addr.split(":");
  const client = await EnvforgeClient.connect({ host, port: Number(portText) });
  const lines = fs.readFileSync(path, "utf8").split("\n").filter(Boolean);
  let matched = 0;
  for (const line of lines) {
    const logged = JSON.parse(line) as LoggedTrajectory;
    const session = await client.reset(logged.env, logged.seed, {
      thinking: logged.config.thinking_required,
    });
    let ok = true;
    for (const step of logged.steps) {
      const bundle = await session.step(step.action_raw);
      if (bundle.reward !== step.reward || bundle.done !== step.done) {
        ok = false;
        break;
      }
    }
    if (ok) matched += 1;
    console.log(`${logged.env} seed=${logged.seed}: ${ok ? "reproduced" : "DIVERGED"}`);
  }
  client.end();
  console.log(`${matched}/${lines.length} episodes reproduced`);
  return matched === lines.length ? 0 : 1;
}

main().then((code) => process.exit(code));
