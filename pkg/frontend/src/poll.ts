// Run polling: ask for the record on an easing interval (1s stretching to
// 5s) until it reaches a terminal status. Sleep is injectable so tests can
// drive the schedule without real time.

import type { RunRecordDoc } from "./types.js";

export interface PollOptions {
  /** Called after every fetch with the latest record. */
  onUpdate?: (record: RunRecordDoc) => void;
  sleep?: (ms: number) => Promise<void>;
  initialMs?: number;
  maxMs?: number;
  stepMs?: number;
}

const realSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export function isTerminal(status: string): boolean {
  return status === "done" || status === "failed";
}

/** Next delay in the schedule: grows by stepMs until it hits maxMs. */
export function nextDelay(current: number, stepMs: number, maxMs: number): number {
  return Math.min(current + stepMs, maxMs);
}

export async function pollRun(
  getRun: (runId: string) => Promise<RunRecordDoc>,
  runId: string,
  options: PollOptions = {},
): Promise<RunRecordDoc> {
  const sleep = options.sleep ?? realSleep;
  const maxMs = options.maxMs ?? 5000;
  const stepMs = options.stepMs ?? 1000;
  let delay = options.initialMs ?? 1000;

  for (;;) {
    const record = await getRun(runId);
    options.onUpdate?.(record);
    if (isTerminal(record.status)) return record;
    await sleep(delay);
    delay = nextDelay(delay, stepMs, maxMs);
  }
}

/** Poll several runs concurrently; resolves when all are terminal. */
export function pollRuns(
  getRun: (runId: string) => Promise<RunRecordDoc>,
  runIds: string[],
  options: PollOptions = {},
): Promise<RunRecordDoc[]> {
  return Promise.all(runIds.map((id) => pollRun(getRun, id, options)));
}
