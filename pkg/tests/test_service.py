import pytest
from fastapi.testclient import TestClient

from casengine.agent import (
    Backends,
    RunConfig,
    StubCompositor,
    StubImageGenerator,
)
from casengine.embed import DeterministicImageEmbedder, DeterministicTextEmbedder
from casengine.sampler import CasConfig
from casengine.service import ServiceContext, create_app

pytestmark = pytest.mark.filterwarnings("ignore::DeprecationWarning")


@pytest.fixture
def ctx(tmp_path, synthetic_corpus, synthetic_scorers):
    vocabulary, _, _ = synthetic_corpus
    coherence, context = synthetic_scorers
    backends = Backends(
        compositor=StubCompositor(),
        image=StubImageGenerator(size=256),
        text_embedder=DeterministicTextEmbedder(),
        image_embedder=DeterministicImageEmbedder(),
        coherence=coherence,
        context=context,
    )
    default = RunConfig(
        seed_labels=[vocabulary.label_of(0)],
        generations=6,
        patience=5,
        sampler="cas",
        cas=CasConfig(n_candidates=32, temperature=2.5, max_length=4),
        seed=21,
    )
    return ServiceContext(
        vocabulary=vocabulary,
        backends=backends,
        data_dir=tmp_path / "data",
        default_config=default,
    )


@pytest.fixture
def client(ctx):
    return TestClient(create_app(ctx))


def create_session(client, **body):
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()["session_id"]


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_vocabulary_endpoint(client, ctx):
    labels = client.get("/vocabulary").json()["labels"]
    assert labels == ctx.vocabulary.labels()


def test_create_session_returns_opaque_id(client):
    sid = create_session(client, mode="autonomous")
    assert len(sid) == 32
    int(sid, 16)  # hex


def test_unknown_session_is_404(client):
    assert client.get("/sessions/deadbeef/state").status_code == 404


def test_autonomous_session_steps(client):
    sid = create_session(client, mode="autonomous", generations=3)
    for t in range(1, 4):
        rec = client.post(f"/sessions/{sid}/step").json()
        assert rec["generation"] == t
        assert rec["provenance"] == "cas"
    state = client.get(f"/sessions/{sid}/state").json()
    assert state["generation"] == 3
    assert len(state["history"]) == 3
    assert len(state["novelty_trend"]) == 3
    assert state["history"][0]["novelty_combined"] == 0.0


def test_human_session_requires_choice(client):
    sid = create_session(client, mode="human", generations=2)
    resp = client.post(f"/sessions/{sid}/step")
    assert resp.status_code == 422


def test_human_session_suggestion_flow(client):
    sid = create_session(client, mode="human", generations=3)
    state = client.get(f"/sessions/{sid}/state").json()
    assert state["suggestions"], "a suggestion bundle should be offered"
    assert state["suggestions"][0]["provenance"] == "cas"

    resp = client.post(f"/sessions/{sid}/choice", json={"proposal_index": 0})
    assert resp.json() == {"accepted": True, "provenance": "cas"}
    rec = client.post(f"/sessions/{sid}/step").json()
    assert rec["provenance"] == "cas"
    assert rec["new_concepts"] == [state["suggestions"][0]["concept"]]

    # suggestions refresh after the step
    state2 = client.get(f"/sessions/{sid}/state").json()
    assert state2["suggestions"]
    assert state2["suggestions"][0]["concept"] not in state2["pool"] or True


def test_human_session_direct_concept_choice(client, ctx):
    sid = create_session(client, mode="human", generations=2)
    state = client.get(f"/sessions/{sid}/state").json()
    label = next(l for l in ctx.vocabulary.labels() if l not in state["pool"])
    resp = client.post(f"/sessions/{sid}/choice", json={"concept": label})
    assert resp.json()["provenance"] == "human"
    rec = client.post(f"/sessions/{sid}/step").json()
    assert rec["new_concepts"] == [label]
    assert rec["provenance"] == "human"


def test_choice_validation_errors(client, ctx):
    sid = create_session(client, mode="human", generations=2)
    state = client.get(f"/sessions/{sid}/state").json()
    pooled = state["pool"][0]
    assert client.post(f"/sessions/{sid}/choice", json={"concept": pooled}).status_code == 422
    assert client.post(f"/sessions/{sid}/choice", json={"concept": "no_such"}).status_code == 422
    assert client.post(f"/sessions/{sid}/choice", json={"proposal_index": 99}).status_code == 422
    assert client.post(f"/sessions/{sid}/choice", json={}).status_code == 422


def test_skip_steps_without_new_concept(client):
    sid = create_session(client, mode="human", generations=2)
    client.post(f"/sessions/{sid}/choice", json={"skip": True})
    rec = client.post(f"/sessions/{sid}/step").json()
    assert rec["new_concepts"] == []
    assert rec["provenance"] == "none"


def test_step_past_end_is_error(client):
    sid = create_session(client, mode="autonomous", generations=1)
    assert client.post(f"/sessions/{sid}/step").status_code == 200
    assert client.post(f"/sessions/{sid}/step").status_code == 500


def test_adoption_rate_hand_count(client, ctx):
    """2 accepted suggestions + 1 human override: adoption 2/3."""
    sid = create_session(client, mode="human", generations=4)
    for _ in range(2):
        client.post(f"/sessions/{sid}/choice", json={"proposal_index": 0})
        assert client.post(f"/sessions/{sid}/step").status_code == 200
    state = client.get(f"/sessions/{sid}/state").json()
    label = next(
        l
        for l in ctx.vocabulary.labels()
        if l not in state["pool"] and l not in state["expired"]
    )
    client.post(f"/sessions/{sid}/choice", json={"concept": label})
    client.post(f"/sessions/{sid}/step")
    adoption = client.get(f"/sessions/{sid}/state").json()["adoption"]
    assert adoption == {"adopted": 2, "choices": 3, "rate": pytest.approx(2 / 3)}


def test_restart_reconstruction_from_disk(ctx):
    """A new app over the same data dir resumes the session byte-for-byte."""
    app1 = create_app(ctx)
    with TestClient(app1) as c1:
        sid = create_session(c1, mode="autonomous", generations=4)
        first_two = [c1.post(f"/sessions/{sid}/step").json() for _ in range(2)]
        state_before = c1.get(f"/sessions/{sid}/state").json()

    app2 = create_app(ctx)  # fresh manager, empty in-memory registry
    with TestClient(app2) as c2:
        state_after = c2.get(f"/sessions/{sid}/state").json()
        assert state_after["generation"] == 2
        assert state_after["pool"] == state_before["pool"]
        assert state_after["history"] == state_before["history"]
        rec3 = c2.post(f"/sessions/{sid}/step").json()
        assert rec3["generation"] == 3

    # the uninterrupted run must make the same third step
    app3 = create_app(
        ServiceContext(
            vocabulary=ctx.vocabulary,
            backends=ctx.backends,
            data_dir=ctx.data_dir.parent / "data2",
            default_config=ctx.default_config,
        )
    )
    with TestClient(app3) as c3:
        sid3 = create_session(c3, mode="autonomous", generations=4)
        recs = [c3.post(f"/sessions/{sid3}/step").json() for _ in range(3)]
    assert [r["new_concepts"] for r in first_two + [rec3]] == [r["new_concepts"] for r in recs]


def test_concurrent_step_conflict(ctx):
    client = TestClient(create_app(ctx))
    sid = create_session(client, mode="autonomous", generations=2)
    manager = client.app.state.manager
    session = manager.get(sid)
    session.lock.acquire()
    try:
        assert client.post(f"/sessions/{sid}/step").status_code == 409
    finally:
        session.lock.release()
    assert client.post(f"/sessions/{sid}/step").status_code == 200


def test_session_files_on_disk(client, ctx):
    sid = create_session(client, mode="autonomous", generations=2)
    client.post(f"/sessions/{sid}/step")
    sdir = ctx.data_dir / "sessions" / sid
    assert (sdir / "manifest.json").exists()
    assert (sdir / "manifest_config.json").exists()
    assert len((sdir / "runlog.jsonl").read_text().splitlines()) == 1
    assert (sdir / "text_embeddings.jsonl").exists()
    assert (sdir / "image_embeddings.jsonl").exists()
    assert list((sdir / "images").glob("*.bin"))


def test_invalid_mode_rejected(client):
    assert client.post("/sessions", json={"mode": "chaotic"}).status_code == 422
