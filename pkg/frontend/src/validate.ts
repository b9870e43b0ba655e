/**
 * Client-side validation of the prior draft. Only structural sanity lives
 * here (finite numbers, positive spreads); anything statistical is the
 * service's call. Invalid drafts never leave the browser.
 */

import type { PriorSpec } from './types.js';

export interface PriorDraft {
  m_mu: number;
  s_mu: number;
  m_nu: number;
  s_nu: number;
  m_eta: number;
  s_eta: number;
}

export interface DraftIssue {
  field: keyof PriorDraft;
  message: string;
}

export function validateDraft(draft: PriorDraft): DraftIssue[] {
  const issues: DraftIssue[] = [];
  const entries = Object.entries(draft) as [keyof PriorDraft, number][];
  for (const [field, value] of entries) {
    if (typeof value !== 'number' || !isFinite(value)) {
      issues.push({ field, message: 'must be a finite number' });
      continue;
    }
    if (field.startsWith('s_') && !(value > 0)) {
      issues.push({ field, message: 'spread must be > 0' });
    }
  }
  return issues;
}

/** Draft to the service's prior shape; call only on a validated draft. */
export function draftToPrior(draft: PriorDraft): PriorSpec {
  const issues = validateDraft(draft);
  if (issues.length > 0) {
    throw new Error(`invalid draft: ${issues.map((i) => `${i.field} ${i.message}`).join('; ')}`);
  }
  return {
    mean: [draft.m_mu, draft.m_nu, draft.m_eta],
    sd: [draft.s_mu, draft.s_nu, draft.s_eta],
  };
}

export function priorToDraft(prior: PriorSpec): PriorDraft {
  return {
    m_mu: prior.mean[0],
    s_mu: prior.sd[0],
    m_nu: prior.mean[1],
    s_nu: prior.sd[1],
    m_eta: prior.mean[2],
    s_eta: prior.sd[2],
  };
}
