/** Polling instead of push: refresh every 2 s while the view is mounted. */

export const POLL_INTERVAL_MS = 2000;

export interface Poller {
  stop(): void;
}

export function startPolling(tick: () => Promise<void> | void,
                             intervalMs: number = POLL_INTERVAL_MS): Poller {
  let active = true;
  const timer = setInterval(() => {
    if (!active) return;
    void tick();
  }, intervalMs);
  void tick();
  return {
    stop() {
      active = false;
      clearInterval(timer);
    },
  };
}
