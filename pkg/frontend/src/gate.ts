/**
 * Single-in-flight request gate for what-if calls.
 *
 * Every multiplier change submits exactly one request. A newer submit aborts
 * the in-flight one (when the transport honours AbortSignal) and, regardless,
 * wins the render: responses landing for a superseded submit are dropped, so
 * the curves on screen always belong to the latest slider position
 * (last-write-wins).
 */

import { WhatIfRequest, WhatIfResponse } from './types.js';

export type PostFn = (
  body: WhatIfRequest,
  signal: AbortSignal
) => Promise<WhatIfResponse>;

export class WhatIfGate {
  private seq = 0;
  private settled = 0;
  private controller: AbortController | null = null;

  constructor(
    private readonly post: PostFn,
    private readonly onResult: (resp: WhatIfResponse) => void,
    private readonly onError: (err: unknown) => void
  ) {}

  /** True while the newest submit has not settled. */
  inFlight(): boolean {
    return this.seq > this.settled;
  }

  submit(body: WhatIfRequest): void {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.seq;

    this.post(body, controller.signal).then(
      (resp) => {
        if (ticket !== this.seq) return; // superseded while in flight
        this.settled = ticket;
        this.onResult(resp);
      },
      (err) => {
        if (ticket !== this.seq) return; // abort/failure of a stale request
        this.settled = ticket;
        this.onError(err);
      }
    );
  }
}
