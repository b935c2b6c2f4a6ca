/** Learning-rate schedules and the differential group rates.
 *
 * The unfreeze phase uses cosine annealing with warm restarts: within
 * each cycle the rate decays from the base along a half cosine, then
 * snaps back to the base at the next cycle start. Layer groups train at
 * geometrically spaced fractions of the scheduled rate
 * (head : middle : early = 1 : 1/3 : 1/9).
 */

export const GROUP_RATE_DIVISORS = { head: 1, middle: 3, early: 9 } as const;

export type GroupName = keyof typeof GROUP_RATE_DIVISORS;

export function groupRates(baseRate: number): Record<GroupName, number> {
  return {
    head: baseRate / GROUP_RATE_DIVISORS.head,
    middle: baseRate / GROUP_RATE_DIVISORS.middle,
    early: baseRate / GROUP_RATE_DIVISORS.early,
  };
}

/** Cycle lengths summing to totalSteps; earlier cycles take the remainder. */
export function cycleLengths(totalSteps: number, cycles: number): number[] {
  if (!Number.isInteger(totalSteps) || totalSteps < 1) {
    throw new Error(`totalSteps must be a positive integer, got ${totalSteps}`);
  }
  if (!Number.isInteger(cycles) || cycles < 1 || cycles > totalSteps) {
    throw new Error(`cycles must be in 1..totalSteps, got ${cycles}`);
  }
  const base = Math.floor(totalSteps / cycles);
  const remainder = totalSteps % cycles;
  return Array.from({ length: cycles }, (_, i) => base + (i < remainder ? 1 : 0));
}

/**
 * Per-step learning rates over the whole unfreeze phase.
 * Step t within a cycle of length L gets
 *   min + (base - min) * (1 + cos(pi * t / L)) / 2,
 * so every cycle starts exactly at the base rate (t = 0).
 */
export function cosineRestartSchedule(
  baseRate: number,
  totalSteps: number,
  cycles: number,
  minRate = 0,
): number[] {
  if (!(baseRate > 0) || minRate < 0 || minRate > baseRate) {
    throw new Error(`need 0 <= minRate <= baseRate, got ${minRate} / ${baseRate}`);
  }
  const rates: number[] = [];
  for (const length of cycleLengths(totalSteps, cycles)) {
    for (let t = 0; t < length; t++) {
      rates.push(minRate + ((baseRate - minRate) * (1 + Math.cos((Math.PI * t) / length))) / 2);
    }
  }
  return rates;
}

/** Indices where a new cycle (warm restart) begins. */
export function restartSteps(totalSteps: number, cycles: number): number[] {
  const starts: number[] = [];
  let step = 0;
  for (const length of cycleLengths(totalSteps, cycles)) {
    starts.push(step);
    step += length;
  }
  return starts;
}
