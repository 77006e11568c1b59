/**
 * Thin fetch wrappers over the gateway. No retries, no caching — the gate
 * module owns request sequencing and the state module owns error display.
 */

import {
  SeriesDetail,
  SeriesListEntry,
  ServiceError,
  WhatIfRequest,
  WhatIfResponse,
} from './types.js';

/** Raised for non-2xx responses, carrying the service's typed error body. */
export class GatewayError extends Error {
  readonly status: number;
  readonly kind: string;

  constructor(status: number, body: ServiceError | null) {
    super(body ? `${body.error}: ${body.detail}` : `service returned ${status}`);
    this.status = status;
    this.kind = body ? body.error : 'HttpError';
  }
}

const asJson = async <T>(resp: Response): Promise<T> => {
  if (!resp.ok) {
    let body: ServiceError | null = null;
    try {
      body = (await resp.json()) as ServiceError;
    } catch {
      // non-JSON error page; fall through with the bare status
    }
    throw new GatewayError(resp.status, body);
  }
  return (await resp.json()) as T;
};

export const fetchCatalog = (base: string): Promise<SeriesListEntry[]> =>
  fetch(`${base}/api/series`).then((r) => asJson<SeriesListEntry[]>(r));

export const fetchDetail = (base: string, sid: string): Promise<SeriesDetail> =>
  fetch(`${base}/api/series/${encodeURIComponent(sid)}`).then((r) =>
    asJson<SeriesDetail>(r)
  );

export const postWhatIf = (
  base: string,
  body: WhatIfRequest,
  signal?: AbortSignal
): Promise<WhatIfResponse> =>
  fetch(`${base}/api/whatif`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
    signal,
  }).then((r) => asJson<WhatIfResponse>(r));
