/**
 * Scripted two-trial walkthrough for the console: one incorrect response at
 * a high stimulus level, then one correct response at a mid level, with the
 * posterior inspected after each step.
 *
 * The session service only ever tests at levels its own placement picks, so
 * the script pins placement by dominance: each step runs in a session whose
 * stimulus grid holds exactly two levels, the scripted one and the bottom of
 * the range. At the bottom of a forced-choice range the response is a fair
 * coin for every plausible parameter vector, which makes that level carry
 * (near) zero expected information, so the placement criterion selects the
 * scripted level; the explicit check after each proposal makes any violation
 * loud instead of silently recording at the wrong level. The second step
 * continues from the first by handing the service's reported posterior
 * (mode and spread, copied verbatim) back as the next session's prior.
 * Every number in the transcript is a service response; the client only
 * sequences calls.
 */

import { ApiClient } from './api.js';
import type {
  CreateSessionBody,
  DesignSpec,
  EstimateReport,
  PriorSpec,
} from './types.js';

export const DEMO_HIGH_LEVEL = 6.0;
export const DEMO_MID_LEVEL = 3.0;

export interface DemoStep {
  label: string;
  report: EstimateReport;
}

export interface DemoTranscript {
  design: DesignSpec;
  steps: DemoStep[];
}

function scriptedSession(
  design: DesignSpec,
  prior: PriorSpec,
  level: number,
  seed: number,
): CreateSessionBody {
  if (!(level > design.x_lo)) {
    throw new Error(`scripted level ${level} must sit above the range bottom ${design.x_lo}`);
  }
  return {
    design,
    prior,
    policy: {
      kind: 'psi',
      grid: { levels: [design.x_lo, level], refine_rounds: 0, refine_shrink: 0.2 },
      sample_count: 400,
      approximate: false,
    },
    stopping_rule: { kind: 'fixed_trials', count: 1 },
    seed,
  };
}

export async function runTwoTrialDemo(
  client: ApiClient,
  design: DesignSpec,
  prior: PriorSpec,
  seed = 4242,
  reportSamples = 3000,
): Promise<DemoTranscript> {
  const first = await client.createSession(
    scriptedSession(design, prior, DEMO_HIGH_LEVEL, seed),
  );
  const priorReport = await client.estimate(first.id, 1, reportSamples);

  const step1 = await client.next(first.id);
  if (step1.x !== DEMO_HIGH_LEVEL) {
    throw new Error(`scripted grid should pin placement at ${DEMO_HIGH_LEVEL}, got ${step1.x}`);
  }
  const afterMiss = await client.respond(first.id, 0);
  const missReport = await client.estimate(first.id, 1, reportSamples);

  const handoff: PriorSpec = {
    mean: [...afterMiss.posterior.mode],
    sd: [...afterMiss.posterior.sd],
  };
  const second = await client.createSession(
    scriptedSession(design, handoff, DEMO_MID_LEVEL, seed + 1),
  );
  const step2 = await client.next(second.id);
  if (step2.x !== DEMO_MID_LEVEL) {
    throw new Error(`scripted grid should pin placement at ${DEMO_MID_LEVEL}, got ${step2.x}`);
  }
  await client.respond(second.id, 1);
  const hitReport = await client.estimate(second.id, 1, reportSamples);

  return {
    design,
    steps: [
      { label: 'prior', report: priorReport },
      { label: `incorrect at ${DEMO_HIGH_LEVEL}`, report: missReport },
      { label: `correct at ${DEMO_MID_LEVEL}`, report: hitReport },
    ],
  };
}

export interface DemoShifts {
  first: number;
  second: number;
  firstUpward: boolean;
  secondSmaller: boolean;
}

/**
 * Threshold-mean movement across the transcript, in stimulus units. The
 * expected picture: the miss at a high level drags the threshold posterior
 * upward by a lot; the hit at a mid level barely moves it.
 */
export function demoShifts(transcript: DemoTranscript): DemoShifts {
  const means = transcript.steps.map((s) => {
    const thr = s.report.functionals.threshold;
    if (thr === null) {
      throw new Error(`demo step ${s.label} lost its threshold functional`);
    }
    return thr.mean;
  });
  if (means.length !== 3) {
    throw new Error(`demo transcript has ${means.length} steps, expected 3`);
  }
  const first = means[1]! - means[0]!;
  const second = means[2]! - means[1]!;
  return {
    first,
    second,
    firstUpward: first > 0,
    secondSmaller: Math.abs(second) < Math.abs(first),
  };
}
