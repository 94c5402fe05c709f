import json
import random
import threading

import httpx
import pytest

from tafc.errors import BudgetExhausted, UpstreamTimeout, UpstreamUnreachable
from tafc.filtering import ReasoningTrace, wrap_arguments
from tafc.gateway import Budget, Gateway, ProxyConfig, make_server
from tafc.schema_model import canonical_json
from tafc.trace_store import TraceStore

from cases import random_case
from gwstubs import FakeClock, RecordingExecutor, StubUpstream, tool_call_response

REQUEST_MSGS = [{"role": "user", "content": "What's the weather in Paris?"}]


def weather_request(weather_raw):
    return {"model": "m", "messages": REQUEST_MSGS, "tools": [weather_raw]}


def one_call(args):
    return StubUpstream(lambda req: tool_call_response([("get_weather", args)]))


def make(upstream, **cfg):
    clock = cfg.pop("clock", None) or FakeClock()
    executor = cfg.pop("executor", None)
    return Gateway(ProxyConfig(**cfg), upstream, TraceStore(), executor, clock=clock)


def test_pipeline(weather_raw):
    up = one_call({"think": "user asked for Paris weather", "location": "Paris"})
    gw = make(up)
    resp = gw.handle_chat_request(weather_request(weather_raw), "s1")
    sent = up.requests[0]
    props = sent["tools"][0]["function"]["parameters"]["properties"]
    assert list(props)[0] == "think"
    assert "x-tafc" not in sent["tools"][0]["function"]
    assert sent["temperature"] == 0.1
    call = resp["choices"][0]["message"]["tool_calls"][0]
    assert json.loads(call["function"]["arguments"]) == {"location": "Paris"}
    ext = resp["tafc"]
    assert ext["session"] == "s1"
    assert ext["calls"][0]["trace"]["function_level"] == "user asked for Paris weather"
    assert ext["calls"][0]["outcome"] == "success"
    assert len(gw.store) == 1
    rec = gw.store.records()[0]
    assert rec.x == "What's the weather in Paris?" and rec.parameters == {"location": "Paris"}


def test_client_temperature_kept(weather_raw):
    up = one_call({"location": "Paris"})
    make(up).handle_chat_request({**weather_request(weather_raw), "temperature": 0.7}, "s")
    assert up.requests[0]["temperature"] == 0.7


def test_reasoning_extension_opt_out(weather_raw):
    resp = make(one_call({"think": "x", "location": "Paris"}), expose_reasoning=False).handle_chat_request(weather_request(weather_raw), "s")
    assert "trace" not in resp["tafc"]["calls"][0]
    assert "think" not in resp["choices"][0]["message"]["tool_calls"][0]["function"]["arguments"]


def test_eleventh_call_refused(weather_raw):
    gw = make(one_call({"location": "Paris"}))
    for _ in range(10):
        gw.handle_chat_request(weather_request(weather_raw), "s")
    with pytest.raises(BudgetExhausted) as exc:
        gw.handle_chat_request(weather_request(weather_raw), "s")
    assert exc.value.limit == 10
    assert [r.outcome for r in gw.store][-1] == "budget_exhausted"
    assert len(gw.store) == 11
    # other sessions are unaffected
    gw.handle_chat_request(weather_request(weather_raw), "other")


def test_partial_refusal_reported(weather_raw):
    up = StubUpstream(lambda req: tool_call_response([("get_weather", {"location": c}) for c in "ABC"]))
    gw = make(up, budget=Budget(max_tool_calls=2))
    resp = gw.handle_chat_request(weather_request(weather_raw), "s")
    assert len(resp["choices"][0]["message"]["tool_calls"]) == 2
    assert resp["tafc"]["refusals"] == [{"tool_call_id": "call-2", "reason": "budget_exhausted"}]
    assert [r.outcome for r in gw.store] == ["success", "success", "budget_exhausted"]


def test_enforce_budget_examples():
    gw = make(one_call({}))
    assert gw.enforce_budget("fresh") and gw.budget.used("fresh") == 1
    for _ in range(9):
        gw.enforce_budget("fresh")
    assert not gw.enforce_budget("fresh")


def test_twenty_concurrent_permits():
    gw = make(one_call({}))
    barrier = threading.Barrier(20)
    results = []

    def worker():
        barrier.wait()
        results.append(gw.enforce_budget("shared"))

    threads = [threading.Thread(target=worker) for _ in range(20)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results.count(True) == 10 and len(results) == 20


def test_twenty_concurrent_requests(weather_raw):
    gw = make(one_call({"think": "r", "location": "Paris"}))
    barrier = threading.Barrier(20)
    outcomes = []

    def worker():
        barrier.wait()
        try:
            gw.handle_chat_request(weather_request(weather_raw), "shared")
            outcomes.append("ok")
        except BudgetExhausted:
            outcomes.append("refused")

    threads = [threading.Thread(target=worker) for _ in range(20)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert outcomes.count("ok") == 10
    assert sorted(r.outcome for r in gw.store) == ["budget_exhausted"] * 10 + ["success"] * 10
    assert [r.id for r in gw.store] == list(range(1, 21))


def test_stall_records_timeout(weather_raw):
    clock = FakeClock()
    up = StubUpstream(lambda req: tool_call_response([("get_weather", {"location": "Paris"})]), clock, stall=31.0)
    gw = make(up, clock=clock)
    with pytest.raises(UpstreamTimeout):
        gw.handle_chat_request(weather_request(weather_raw), "s")
    assert [r.outcome for r in gw.store] == ["timeout"]


def test_thirty_seconds_is_within_budget(weather_raw):
    clock = FakeClock()
    up = StubUpstream(lambda req: tool_call_response([("get_weather", {"location": "Paris"})]), clock, stall=30.0)
    make(up, clock=clock).handle_chat_request(weather_request(weather_raw), "s")


def test_failures_are_traced(weather_raw):
    up = StubUpstream(lambda req: tool_call_response([("get_weather", "{bad json"), ("nope", {}), ("get_weather", {"unit": "c"})]))
    gw = make(up)
    resp = gw.handle_chat_request(weather_request(weather_raw), "s")
    assert [r.outcome for r in gw.store] == ["validation_error"] * 3
    assert gw.budget.used("s") == 3
    assert [c["outcome"] for c in resp["tafc"]["calls"]] == ["validation_error"] * 3


def test_execution_error(weather_raw):
    gw = make(one_call({"location": "Paris"}), executor=RecordingExecutor(fail=True))
    resp = gw.handle_chat_request(weather_request(weather_raw), "s")
    assert resp["tafc"]["calls"][0]["outcome"] == "execution_error"
    assert gw.store.records()[0].outcome == "execution_error"


def test_strict_mode_rejects_bare_value(db_raw):
    up = StubUpstream(lambda req: tool_call_response([("db_query", {"query": {"filters": ["a"]}})]))
    resp = make(up, mode="strict").handle_chat_request({"messages": REQUEST_MSGS, "tools": [db_raw]}, "s")
    assert resp["tafc"]["calls"][0]["outcome"] == "validation_error"
    lenient = make(up).handle_chat_request({"messages": REQUEST_MSGS, "tools": [db_raw]}, "s")
    assert lenient["tafc"]["calls"][0]["outcome"] == "success"
    assert lenient["tafc"]["calls"][0]["warnings"]


def test_pass_through():
    body = {"id": "x", "choices": [{"message": {"role": "assistant", "content": "hi"}}], "usage": {"total_tokens": 3}}
    up = StubUpstream(lambda req: body)
    gw = make(up)
    req = {"model": "m", "messages": REQUEST_MSGS}
    assert gw.handle_chat_request(req, "s") == body
    assert up.requests[0] == req
    assert len(gw.store) == 0


def test_augmentation_off(weather_raw):
    up = one_call({"location": "Paris"})
    make(up, augment=False).handle_chat_request(weather_request(weather_raw), "s")
    assert up.requests[0]["tools"] == [weather_raw]


def test_end_to_end_behavior_preservation():
    rng = random.Random(21)
    for _ in range(100):
        case = random_case(rng, scored=True)
        raw_tool = case.raw_tool
        name = case.aug.name
        wrapped = wrap_arguments(case.aug, case.clean, _trace(case))
        direct, proxied = RecordingExecutor(), RecordingExecutor()
        direct(name, json.loads(json.dumps(case.clean)))
        up = StubUpstream(lambda req: tool_call_response([(name, wrapped)]))
        gw = make(up, executor=proxied)
        gw.handle_chat_request({"messages": REQUEST_MSGS, "tools": [raw_tool]}, "s")
        assert canonical_json(proxied.calls) == canonical_json(direct.calls)


def _trace(case):
    return ReasoningTrace(case.function_think, case.traces)


def test_config_load(tmp_path, monkeypatch):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"temperature": 0.3, "budget": {"max_tool_calls": 4, "timeout_s": 5}, "mode": "strict"}))
    monkeypatch.setenv("TAFC_UPSTREAM_URL", "http://up:9")
    cfg = ProxyConfig.load(str(p))
    assert cfg.upstream_url == "http://up:9" and cfg.budget == Budget(4, 5) and cfg.mode == "strict"
    assert ProxyConfig.from_json(cfg.to_json()) == cfg
    monkeypatch.setenv("TAFC_CONFIG", str(p))
    assert ProxyConfig.load().temperature == 0.3


@pytest.mark.parametrize("bad", [{"temperature": 2.5}, {"mode": "x"}, {"budget": {"max_tool_calls": 0}}, {"colour": 1}])
def test_config_validation(bad):
    with pytest.raises((ValueError, TypeError)):
        ProxyConfig.from_json(bad)


def test_unreachable_upstream(weather_raw):
    cfg = ProxyConfig(upstream_url="http://127.0.0.1:9")
    gw = Gateway(cfg, store=TraceStore())
    with pytest.raises(UpstreamUnreachable):
        gw.handle_chat_request(weather_request(weather_raw), "s")


@pytest.fixture
def server(weather_raw):
    up = StubUpstream(lambda req: tool_call_response([("get_weather", {"think": "t", "location": "Paris"})]))
    gw = make(up, budget=Budget(max_tool_calls=2))
    srv = make_server(gw, "127.0.0.1", 0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}", gw
    srv.shutdown()
    srv.server_close()


def test_http_server(server, weather_raw):
    base, gw = server
    assert httpx.get(f"{base}/healthz").json() == {"status": "ok"}
    hdr = {"X-TAFC-Session": "task-1"}
    for _ in range(2):
        r = httpx.post(f"{base}/v1/chat/completions", json=weather_request(weather_raw), headers=hdr)
        assert r.status_code == 200
        assert json.loads(r.json()["choices"][0]["message"]["tool_calls"][0]["function"]["arguments"]) == {"location": "Paris"}
    r = httpx.post(f"{base}/v1/chat/completions", json=weather_request(weather_raw), headers=hdr)
    assert r.status_code == 429 and r.json()["error"]["type"] == "budget_exhausted"
    # no header: each connection gets its own session
    assert httpx.post(f"{base}/v1/chat/completions", json=weather_request(weather_raw)).status_code == 200
    assert httpx.post(f"{base}/v1/chat/completions", content=b"[1,").status_code == 400
    bad_tool = {"messages": REQUEST_MSGS, "tools": [{"type": "function", "function": {"description": "no name"}}]}
    assert httpx.post(f"{base}/v1/chat/completions", json=bad_tool).status_code == 400
    assert httpx.get(f"{base}/nope").status_code == 404
