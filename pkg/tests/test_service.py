"""HTTP service tests: session lifecycle, validation, replay, quarantine."""

import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sdfbayes.core import SdfConfig
from sdfbayes.sampler import SamplerSettings
from sdfbayes.scenarios import builtin_scenario
from sdfbayes.service import create_app
from sdfbayes.simulate import run_trial

CHAIN = {"draws": 150, "burn": 80, "warmBurn": 20}
FAST = SamplerSettings(n_keep=150, n_burn=80, n_burn_warm=20)


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(tmp_path / "sessions"))


def make_session(client, **overrides):
    body = {"T": 6, "seed": 5, **CHAIN, **overrides}
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


class TestCreation:
    def test_fresh_session_comes_with_a_decision(self, client):
        created = make_session(client)
        assert len(created["sessionId"]) == 12
        assert created["status"] == "active"
        cur = created["current"]
        assert cur["round"] == 1
        assert len(cur["chosenDC"]) == 2
        assert cur["branch"] == "optimistic"
        assert cur["chainSeed"] is not None
        g = np.asarray(created["g"])
        assert g.shape == (3, 4)
        assert ((g >= 0) & (g <= 1)).all()

    @pytest.mark.parametrize("body, fragment", [
        ({"psi": 0.95}, "psi"),
        ({"algorithm": "crm"}, "unknown algorithm"),
        ({"algorithm": "sdf-ep"}, "simulation-only"),
        ({"algorithm": "sdf-ar"}, "at least two groups"),
        ({"algorithm": "sdf", "groups": [{}, {}]}, "-ar or -ur"),
        ({"prior": "vague"}, "unknown prior"),
        ({"T": 0}, "budget"),
    ])
    def test_design_errors_are_422(self, client, body, fragment):
        resp = client.post("/sessions", json={**CHAIN, **body})
        assert resp.status_code == 422
        assert fragment in json.dumps(resp.json())

    def test_unknown_session_is_404(self, client):
        assert client.get("/sessions/feedfacecafe").status_code == 404

    def test_health_endpoint_counts(self, client):
        assert client.get("/healthz").json() == {
            "status": "ok", "sessions": 0, "quarantined": 0}
        make_session(client)
        assert client.get("/healthz").json()["sessions"] == 1


class TestOutcomeFlow:
    def test_runs_to_completion(self, client):
        created = make_session(client, T=4)
        sid = created["sessionId"]
        for i in range(4):
            resp = client.post(f"/sessions/{sid}/outcomes", json={"outcome": 0})
            assert resp.status_code == 200, resp.text
        closed = resp.json()
        assert closed["status"] == "completed"
        assert closed["current"] is None
        assert len(closed["recommendations"]) == 1
        state = client.get(f"/sessions/{sid}").json()
        assert state["enrolled"] == 4
        assert state["dltCount"] == 0 and state["sT"] == 0.0
        assert sum(sum(row) for row in state["counts"][0]["n"]) == 4
        assert len(state["decisions"]) == 4
        assert len(state["residualTrajectory"]) == 4

    def test_closed_session_rejects_outcomes(self, client):
        sid = make_session(client, T=2)["sessionId"]
        for _ in range(2):
            client.post(f"/sessions/{sid}/outcomes", json={"outcome": 0})
        resp = client.post(f"/sessions/{sid}/outcomes", json={"outcome": 0})
        assert resp.status_code == 409
        assert "completed" in resp.json()["detail"]

    def test_malformed_bodies_are_400(self, client):
        sid = make_session(client)["sessionId"]
        url = f"/sessions/{sid}/outcomes"
        bad_json = client.post(url, content="{oops",
                               headers={"content-type": "application/json"})
        assert bad_json.status_code == 400
        assert client.post(url, json={"outcome": 7}).status_code == 400
        assert client.post(url, json={}).status_code == 400
        assert client.post(url, json={"outcome": 0, "dc": [1]}).status_code == 400
        assert client.post(url, json={"outcome": 0, "dc": [9, 9]}).status_code == 400

    def test_overridden_combination_flags_a_deviation(self, client):
        sid = make_session(client)["sessionId"]
        state = client.get(f"/sessions/{sid}").json()
        j, k = state["current"]["chosenDC"]
        other = [j, k + 1] if k < 4 else [j, k - 1]
        resp = client.post(f"/sessions/{sid}/outcomes",
                           json={"outcome": 0, "dc": other})
        assert resp.status_code == 200
        after = client.get(f"/sessions/{sid}").json()
        assert after["deviations"] == 1
        outcome_events = [e for e in after["eventLog"] if e["event"] == "outcome"]
        assert outcome_events[0]["deviation"] is True
        assert outcome_events[0]["dc"] == other

    def test_heatmaps_shape(self, client):
        sid = make_session(client)["sessionId"]
        maps = client.get(f"/sessions/{sid}/heatmaps").json()
        assert len(maps["groups"]) == 1
        g = np.asarray(maps["groups"][0]["g"])
        f = np.asarray(maps["groups"][0]["f"])
        assert g.shape == f.shape == (3, 4)
        assert (f >= 0).all() and (f <= 1).all()


class TestGroupedSessions:
    def design(self, algorithm="sdf-ur", **kw):
        return {"algorithm": algorithm, "T": 8, "seed": 9, **CHAIN,
                "groups": [{}, {"priorSeed": [
                    {"j": 1, "k": 1, "outcome": 0},
                    {"j": 1, "k": 2, "outcome": 0},
                ]}], **kw}

    def test_uniform_rotation_and_per_group_recommendations(self, client):
        resp = client.post("/sessions", json=self.design())
        sid = resp.json()["sessionId"]
        seen_groups = []
        for _ in range(8):
            state = client.get(f"/sessions/{sid}").json()
            seen_groups.append(state["current"]["group"])
            assert state["current"]["mode"] == "UR"
            out = client.post(f"/sessions/{sid}/outcomes", json={"outcome": 0})
            assert out.status_code == 200
        assert seen_groups == [0, 1, 0, 1, 0, 1, 0, 1]
        final = client.get(f"/sessions/{sid}").json()
        assert final["status"] == "completed"
        assert len(final["recommendations"]) == 2
        assert {c["group"] for c in final["counts"]} == {0, 1}

    def test_adaptive_session_reports_scores_after_warmup(self, client):
        resp = client.post("/sessions", json=self.design(algorithm="sdf-ar"))
        assert resp.status_code == 201
        sid = resp.json()["sessionId"]
        state = client.get(f"/sessions/{sid}").json()
        assert state["current"]["mode"] == "warmup"  # t=1 <= T//4
        for _ in range(3):
            client.post(f"/sessions/{sid}/outcomes", json={"outcome": 0})
        state = client.get(f"/sessions/{sid}").json()
        cur = state["current"]
        assert cur["round"] == 4
        if cur["mode"] == "AR":
            assert cur["ei"]  # scores accompany adaptive picks
        else:
            assert cur["mode"] == "warmup"

    def test_bad_prior_seed_is_422(self, client):
        design = self.design()
        design["groups"][1]["priorSeed"][0]["outcome"] = 3
        assert client.post("/sessions", json=design).status_code == 422


class TestReplay:
    def drive(self, client, sid, seed, scenario, rounds):
        """Feed outcomes drawn exactly like the simulation harness does."""
        outcome_seq = np.random.SeedSequence(seed).spawn(2)[0]
        rng = np.random.Generator(np.random.PCG64(outcome_seq))
        tox = scenario.true_tox
        for _ in range(rounds):
            state = client.get(f"/sessions/{sid}").json()
            if state["status"] != "active":
                break
            j, k = state["current"]["chosenDC"]
            y = int(rng.random() < tox[j - 1, k - 1])
            client.post(f"/sessions/{sid}/outcomes", json={"outcome": y})

    def test_live_session_matches_the_simulation_harness(self, client):
        # same master seed, same chain sizes: the service must walk through
        # the identical allocation sequence and recommendation
        scenario = builtin_scenario("A")
        sid = make_session(client, T=8, seed=11)["sessionId"]
        self.drive(client, sid, 11, scenario, rounds=8)
        state = client.get(f"/sessions/{sid}").json()
        oracle = run_trial(scenario, "sdf", SdfConfig(T=8), seed=11,
                           sampler_settings=FAST)
        assert state["status"] == "completed"
        assert tuple(state["recommendations"][0]) == oracle.recommendations[0]
        np.testing.assert_array_equal(
            np.asarray(state["counts"][0]["n"]), oracle.allocation[0])

    def test_restart_rebuilds_identical_state(self, tmp_path):
        data_dir = tmp_path / "sessions"
        first = TestClient(create_app(data_dir))
        sid = make_session(first, T=5, seed=21)["sessionId"]
        self.drive(first, sid, 21, builtin_scenario("A"), rounds=3)
        before = first.get(f"/sessions/{sid}").json()

        reopened = TestClient(create_app(data_dir))
        after = reopened.get(f"/sessions/{sid}").json()
        assert after == before
        # and the reopened session keeps accepting outcomes
        resp = reopened.post(f"/sessions/{sid}/outcomes", json={"outcome": 0})
        assert resp.status_code == 200

    def test_corrupt_log_is_quarantined_not_fatal(self, tmp_path):
        data_dir = tmp_path / "sessions"
        first = TestClient(create_app(data_dir))
        good = make_session(first, T=4, seed=1)["sessionId"]
        bad = make_session(first, T=4, seed=2)["sessionId"]
        with (data_dir / f"{bad}.jsonl").open("a") as fh:
            fh.write('{"event": "outcome", "truncat\n')

        reopened = TestClient(create_app(data_dir))
        health = reopened.get("/healthz").json()
        assert health == {"status": "ok", "sessions": 1, "quarantined": 1}
        resp = reopened.get(f"/sessions/{bad}")
        assert resp.status_code == 409
        detail = resp.json()["detail"]
        assert detail["status"] == "quarantined"
        assert "corrupt event" in detail["reason"]
        # the healthy session is untouched
        assert reopened.get(f"/sessions/{good}").status_code == 200

    def test_log_must_start_with_creation(self, tmp_path):
        data_dir = tmp_path / "sessions"
        data_dir.mkdir()
        (data_dir / "droppedhead42.jsonl").write_text(
            '{"event": "outcome", "round": 1, "dc": [1, 1], "outcome": 0}\n')
        client = TestClient(create_app(data_dir))
        resp = client.get("/sessions/droppedhead42")
        assert resp.status_code == 409
        assert "created" in resp.json()["detail"]["reason"]


FIXTURE_PATH = Path(__file__).resolve().parents[1] / "shared" / "session-design-cases.json"
FIXTURE_CASES = json.loads(FIXTURE_PATH.read_text())["cases"]


class TestSharedValidationCases:
    """The console validates forms against this same fixture; see frontend/."""

    @pytest.mark.parametrize("case", FIXTURE_CASES,
                             ids=[c["name"] for c in FIXTURE_CASES])
    def test_server_verdict_matches_fixture(self, client, case):
        resp = client.post("/sessions", json={**CHAIN, **case["body"]})
        if case["valid"]:
            assert resp.status_code == 201, resp.text
        else:
            assert resp.status_code == 422, resp.text


class TestConsoleAssets:
    def test_static_mount_serves_the_console(self, tmp_path):
        assets = tmp_path / "console"
        assets.mkdir()
        (assets / "index.html").write_text("<html><body>console</body></html>")
        client = TestClient(create_app(tmp_path / "sessions", console_dir=assets))
        resp = client.get("/")
        assert resp.status_code == 200
        assert "console" in resp.text
        # API routes win over the static mount
        assert client.get("/healthz").json()["status"] == "ok"
