import { beforeEach, describe, expect, it } from "vitest";

import { SessionApi } from "../src/api.js";
import { SessionViewModel, jndContourLevel } from "../src/state.js";
import { FakeServer } from "./fake_server.js";

const noSleep = async () => {};

function makeVm(server: FakeServer, id = "s1") {
  const api = new SessionApi("", server.fetch);
  return new SessionViewModel(api, id, 1, noSleep);
}

describe("judgment buttons", () => {
  let server: FakeServer;

  beforeEach(() => {
    server = new FakeServer();
    server.createSession("s1");
  });

  it("maps the three actions to labels +1, -1, 0 on the server", async () => {
    const vm = makeVm(server);
    await vm.refresh();
    expect(await vm.preferNew()).toBe(true);
    expect(await vm.preferPrevious()).toBe(true);
    // the two init pairs are consumed; use a fresh session for the third action
    const srv2 = new FakeServer();
    srv2.createSession("s1");
    const vm2 = makeVm(srv2);
    await vm2.refresh();
    await vm2.cantTell();
    expect(server.received.map((r) => r.label)).toEqual([1, -1]);
    expect(srv2.received.map((r) => r.label)).toEqual([0]);
  });

  it("stop action submits -1 with an annotation", async () => {
    const vm = makeVm(server);
    await vm.refresh();
    await vm.stopRunFlawed();
    expect(server.received[0].label).toBe(-1);
    expect(server.received[0].note).toMatch(/flawed/);
  });

  it("ignores judgments while a request is in flight (double click)", async () => {
    const vm = makeVm(server);
    await vm.refresh();
    const [first, second] = await Promise.all([vm.preferNew(), vm.preferNew()]);
    expect([first, second].filter(Boolean)).toHaveLength(1);
    expect(server.received).toHaveLength(1);
  });

  it("ignores judgments with no pending comparison", async () => {
    const vm = makeVm(server);
    await vm.refresh();
    await vm.preferNew();
    await vm.preferNew(); // consumes the second init pair
    // now interactive with no pending: judging is refused locally
    expect(vm.summary?.phase).toBe("interactive");
    expect(vm.canJudge).toBe(false);
    expect(await vm.preferNew()).toBe(false);
    expect(server.received).toHaveLength(2);
  });
});

describe("next-recommendation flow", () => {
  it("polls the job until done and exposes the new pending config", async () => {
    const server = new FakeServer();
    server.createSession("s1");
    const vm = makeVm(server);
    await vm.refresh();
    await vm.preferNew();
    await vm.preferNew();
    expect(vm.canRequestNext).toBe(true);
    expect(await vm.requestNext()).toBe(true);
    expect(vm.summary?.pending).toBeTruthy();
    expect(vm.history).toHaveLength(4);
    expect(vm.canJudge).toBe(true);
    expect(vm.canRequestNext).toBe(false);
  });

  it("refuses next during init phase", async () => {
    const server = new FakeServer();
    server.createSession("s1");
    const vm = makeVm(server);
    await vm.refresh();
    expect(vm.canRequestNext).toBe(false);
    expect(await vm.requestNext()).toBe(false);
  });
});

describe("hard refresh reconstruction", () => {
  it("a fresh view-model rebuilds the identical history table from GETs", async () => {
    const server = new FakeServer();
    server.createSession("s1");
    const vm = makeVm(server);
    await vm.refresh();
    await vm.preferNew();
    await vm.cantTell();
    await vm.requestNext();
    await vm.preferPrevious();

    const fresh = makeVm(server);
    await fresh.refresh();
    expect(fresh.history).toEqual(vm.history);
    expect(fresh.summary).toEqual(vm.summary);
    // the table carries the judgments the server recorded
    expect(fresh.history.map((r) => r.label)).toEqual([null, 1, 0, -1]);
  });
});

describe("slice state", () => {
  it("renders placeholder before the first fit and data after", async () => {
    const server = new FakeServer();
    server.createSession("s1");
    const vm = makeVm(server);
    await vm.refresh();
    await vm.selectSlice(2, 400);
    expect(vm.slice).toBeNull(); // 409 before training
    await vm.preferNew();
    await vm.preferNew();
    await vm.requestNext();
    await vm.selectSlice(2, 400);
    expect(vm.slice?.mean).toBeTruthy();
    expect(vm.slice?.p_zero_at_max).toBeCloseTo(0.5);
  });
});

describe("contour level convention", () => {
  it("is half the at-maximizer indifference probability", () => {
    expect(jndContourLevel(0.52, 0.04)).toBeCloseTo(0.26);
  });

  it("is absent when the learned threshold is zero", () => {
    expect(jndContourLevel(0.0, 0.0)).toBeNull();
    expect(jndContourLevel(0.5, 0.0)).toBeNull();
  });

  it("supports a configurable fraction", () => {
    expect(jndContourLevel(0.4, 0.1, 0.25)).toBeCloseTo(0.1);
  });
});
