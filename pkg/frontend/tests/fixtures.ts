/** Typed loaders for the recorded service fixtures. */

import { existsSync, readFileSync } from 'node:fs';
import { join } from 'node:path';

import type {
  CreateSessionBody,
  DiagnosticsResponse,
  EstimateReport,
  FunctionDraws,
  NextResponse,
  PreviewBody,
  SessionSummary,
} from '../src/types';
import type { DemoTranscript } from '../src/demo';

function load<T>(name: string): T {
  // DOM test environments rewrite import.meta.url to a root-relative
  // address, so fall back to the package root (vitest runs from it) when
  // the module-relative path does not exist.
  const fromModule = new URL(`./fixtures/${name}`, import.meta.url);
  const source =
    fromModule.protocol === 'file:' && existsSync(fromModule)
      ? fromModule
      : join(process.cwd(), 'tests', 'fixtures', name);
  return JSON.parse(readFileSync(source, 'utf8')) as T;
}

export interface PreviewFixture {
  request: PreviewBody;
  response: FunctionDraws;
}

export interface TraceEntry {
  method: string;
  path: string;
  request_body: unknown;
  status: number;
  response: unknown;
}

export interface DemoFixture {
  transcript: DemoTranscript;
  trace: TraceEntry[];
}

export interface ConsoleFixture {
  request: CreateSessionBody;
  created: SessionSummary;
  transcript: { proposal: NextResponse; response: number; state: SessionSummary }[];
  estimate: EstimateReport;
  diagnostics: DiagnosticsResponse;
}

export const previewDefault = (): PreviewFixture => load('preview_default.json');
export const previewTight = (): PreviewFixture => load('preview_tight_smu.json');
export const previewLoose = (): PreviewFixture => load('preview_loose_smu.json');
export const demoFixture = (): DemoFixture => load('two_trial_demo.json');
export const consoleFixture = (): ConsoleFixture => load('session_console.json');
