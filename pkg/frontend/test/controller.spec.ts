import { describe, expect, it } from "vitest";

import { PrefApi } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { FakeServer } from "./fakeServer.js";

function setup(opts: { random?: () => number } = {}) {
  const server = new FakeServer();
  const api = new PrefApi("", server.fetch);
  const controller = new SessionController(api, opts.random ?? (() => 0.1));
  return { server, api, controller };
}

describe("scripted session", () => {
  it("completes 10 choices with the chosen proposal becoming the next reference", async () => {
    const { server, controller } = setup();
    await controller.start({ dims: 2 });
    expect(controller.snapshot().trialStep).toBe(1);

    for (let i = 0; i < 10; i++) {
      const before = controller.snapshot();
      const label = i % 3 === 0 ? "A" : "B"; // mix of both choices
      const chosen = label === "B" ? before.cardB : before.cardA;
      await controller.choose(label);
      const after = controller.snapshot();
      expect(after.responsesAccepted).toBe(i + 1);
      // the displayed reference (card A) equals the previously chosen proposal
      expect(after.cardA).toEqual(chosen);
    }
    expect(server.postCount).toBe(10);
    expect(controller.snapshot().miTrace).toHaveLength(10);
  });

  it("keeps rsu equal to the mean of the sparkline trace", async () => {
    const { controller } = setup();
    await controller.start({ dims: 2 });
    for (let i = 0; i < 5; i++) await controller.choose("B");
    const view = controller.snapshot();
    const mean = view.miTrace.reduce((a, b) => a + b, 0) / view.miTrace.length;
    expect(view.rsu).toBeCloseTo(mean, 9);
  });
});

describe("double-click protection", () => {
  it("a second concurrent click is a no-op", async () => {
    const { server, controller } = setup();
    await controller.start({ dims: 2 });
    const first = controller.choose("A");
    const second = controller.choose("A"); // fired before the first resolves
    await Promise.all([first, second]);
    expect(server.postCount).toBe(1);
    expect(controller.snapshot().responsesAccepted).toBe(1);
  });
});

describe("stale-step conflicts", () => {
  it("silently refetches instead of resubmitting", async () => {
    const { server, api, controller } = setup();
    await controller.start({ dims: 2 });
    const id = controller.snapshot().sessionId!;
    // another tab answers step 1 behind our back
    await api.postResponse(id, 1, 0);
    expect(server.postCount).toBe(1);

    await controller.choose("B"); // stale echo -> 409 -> refetch
    const view = controller.snapshot();
    expect(server.postCount).toBe(1); // no duplicate submit
    expect(view.responsesAccepted).toBe(1);
    expect(view.trialStep).toBe(2); // converged on the server's view
    expect(view.banner).toBeNull();
  });
});

describe("terminal sessions", () => {
  it("disables further choices", async () => {
    const server = new FakeServer();
    const s = server.createSession(2, 2);
    const api = new PrefApi("", server.fetch);
    const controller = new SessionController(api, () => 0.9);
    await controller.resume(s.id);
    await controller.choose("A");
    await controller.choose("B");
    expect(controller.snapshot().status).toBe("max_steps_reached");
    const posts = server.postCount;
    await controller.choose("A"); // no-op on terminal
    expect(server.postCount).toBe(posts);
  });
});

describe("metrics polling", () => {
  it("flags staleness after three missed polls and keeps last data", async () => {
    const { server, controller } = setup();
    await controller.start({ dims: 2 });
    await controller.choose("B");
    const healthy = controller.snapshot();

    let down = true;
    const flaky = new SessionController(
      new PrefApi("", async (input, init) => {
        if (down && init?.method !== "POST") throw new Error("connection refused");
        return server.fetch(input, init);
      }),
    );
    await flaky.resume(healthy.sessionId!); // fails while down
    down = false;
    await flaky.resume(healthy.sessionId!);
    await flaky.choose("B");
    down = true;
    for (let i = 0; i < 2; i++) {
      await flaky.poll();
      expect(flaky.snapshot().stale).toBe(false);
    }
    await flaky.poll();
    const view = flaky.snapshot();
    expect(view.stale).toBe(true);
    expect(view.miTrace.length).toBeGreaterThan(0); // last data retained

    down = false;
    await flaky.poll();
    expect(flaky.snapshot().stale).toBe(false);
  });
});

describe("startup failures", () => {
  it("shows a banner when the API is unreachable", async () => {
    const controller = new SessionController(
      new PrefApi("", async () => {
        throw new Error("connection refused");
      }),
    );
    await controller.start({ dims: 2 });
    const view = controller.snapshot();
    expect(view.banner).toContain("connection refused");
    expect(view.sessionId).toBeNull();
  });
});

describe("reload recovery", () => {
  it("restores the full view from the server state", async () => {
    const { controller, api } = setup();
    await controller.start({ dims: 2 });
    await controller.choose("B");
    await controller.choose("A");
    const before = controller.snapshot();

    const fresh = new SessionController(api, () => 0.4);
    await fresh.resume(before.sessionId!);
    const view = fresh.snapshot();
    expect(view.trialStep).toBe(before.trialStep);
    expect(view.cardA).toEqual(before.cardA);
    expect(view.cardB).toEqual(before.cardB);
    expect(view.miTrace).toEqual(before.miTrace);
    expect(view.rsu).toBe(before.rsu);
  });
});

describe("screen-order randomization", () => {
  it("randomizes placement per trial but keeps the A/B payload mapping", async () => {
    let flip = 0.9;
    const { server, controller } = setup({ random: () => flip });
    await controller.start({ dims: 2 });
    expect(controller.snapshot().screenOrder).toEqual(["B", "A"]);
    const before = controller.snapshot();
    flip = 0.1;
    await controller.choose("B"); // r=1 regardless of screen position
    const after = controller.snapshot();
    expect(after.screenOrder).toEqual(["A", "B"]);
    expect(after.cardA).toEqual(before.cardB); // alternative won, became reference
    expect(server.postCount).toBe(1);
  });
});
