"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured numbers. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import time

import numpy as np
import pytest

from eskin import cnn, operator_sim, robot, sensing, skin, tsne, weighing
from eskin.protocol import messages as msg
from eskin.protocol.session import SessionState, Stage, session_step
from tests.test_protocol import random_message
from tests.test_tsne import gaussian_clusters, silhouette

MU0 = 4e-7 * np.pi


@pytest.fixture(scope="module")
def geom():
    return skin.SkinGeometry()


@pytest.fixture(scope="module")
def film(geom):
    return skin.make_film(geom)


@pytest.fixture(scope="module")
def dataset_builds(tmp_path_factory):
    """The default 2400-window dataset, built twice for the byte-identity
    check; the first build feeds the classifier criterion."""
    out = tmp_path_factory.mktemp("acceptance")
    t0 = time.perf_counter()
    ds1 = sensing.build_dataset(per_class=200, seed=42)
    build_s = time.perf_counter() - t0
    ds2 = sensing.build_dataset(per_class=200, seed=42)
    p1, p2 = out / "a.eskd", out / "b.eskd"
    sensing.save_dataset(p1, ds1)
    sensing.save_dataset(p2, ds2)
    return ds1, p1.read_bytes(), p2.read_bytes(), build_s


def test_criterion_magnetostatics_oracle():
    t0 = time.perf_counter()
    # closed-form axial and equatorial fields of a unit dipole at 0.1 m
    b_ax = skin.dipole_field(np.array([0, 0, 1.0]), np.array([0, 0, 0.1]))
    b_eq = skin.dipole_field(np.array([0, 0, 1.0]), np.array([0.1, 0, 0]))
    assert abs(b_ax[2] - 2.0e-4) / 2.0e-4 <= 1e-9
    assert abs(b_eq[2] - (-1.0e-4)) / 1.0e-4 <= 1e-9

    g = skin.SkinGeometry()
    f = skin.make_film(g)
    # superposition of two random moment grids
    rng = np.random.default_rng(0)
    fa, fb, fsum = (skin.deform(f, None) for _ in range(3))
    fa.moments = rng.normal(size=fa.moments.shape) * 1e-6
    fb.moments = rng.normal(size=fb.moments.shape) * 1e-6
    fsum.moments = fa.moments + fb.moments
    lhs = skin.sensor_field(fsum, g)
    rhs = skin.sensor_field(fa, g) + skin.sensor_field(fb, g)
    sup_err = np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-30))
    assert sup_err <= 1e-6

    # center press: paired sensors under the layout's 180-degree symmetry
    read = skin.sensor_field(skin.deform(f, skin.Press((20, 32.5), 2.5, 6)), g)
    sym_err = 0.0
    for i, j in g.rotation_pairs():
        expected = np.array([-read[j, 0], -read[j, 1], read[j, 2]])
        sym_err = max(sym_err, np.max(
            np.abs(read[i] - expected) / np.maximum(np.abs(expected), 1e-30)))
    assert sym_err <= 1e-6
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    print(f"\nPASS magnetostatics-oracle: closed-form <=1e-9, "
          f"superposition {sup_err:.1e}, symmetry {sym_err:.1e}, "
          f"{elapsed:.2f}s")


def test_criterion_interference_ordering(geom, film):
    t0 = time.perf_counter()
    res = skin.interference_experiment(geom, film, press_force_n=4.0)
    motors, press = res.max_delta_ut["motors"], res.max_delta_ut["press"]
    assert motors < press
    ratio = res.motor_press_ratio
    assert ratio < 0.5
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    print(f"PASS interference-ordering: motors {motors:.1f} µT < "
          f"press {press:.1f} µT, ratio {ratio:.3f} < 0.5, {elapsed:.2f}s")


def test_criterion_dataset_shape(dataset_builds):
    ds, bytes_a, bytes_b, build_s = dataset_builds
    assert ds.windows.shape == (2400, 24, 60)
    assert ds.n_train == 1680
    assert len(ds.labels) - ds.n_train == 720
    assert bytes_a == bytes_b
    print(f"PASS dataset-shape: 2400 x 24 x 60, split 1680/720, "
          f"byte-identical rebuild, built in {build_s:.0f}s")


def test_criterion_classifier(dataset_builds):
    ds = dataset_builds[0]
    (tr_x, tr_y), (te_x, te_y) = ds.train, ds.test
    t0 = time.perf_counter()
    model, hist = cnn.train(tr_x, tr_y, cnn.TrainConfig(seed=42),
                            eval_set=(te_x, te_y))
    train_s = time.perf_counter() - t0
    epoch5 = hist.train_acc[4]
    test_acc, _ = cnn.evaluate(model, te_x, te_y)
    assert epoch5 >= 0.98
    assert test_acc >= 0.95
    assert hist.train_loss[0] > hist.train_loss[1] > hist.train_loss[2]

    m64 = cnn.CnnModel(seed=7, dtype=np.float64)
    m64.norm_mean, m64.norm_std = model.norm_mean, model.norm_std
    grad_err = cnn.grad_check(m64, tr_x[:4].astype(np.float64), tr_y[:4],
                              epsilon=1e-4)
    assert grad_err <= 1e-4
    assert train_s < 600.0
    print(f"PASS classifier: epoch-5 train {epoch5:.4f} >= 0.98, "
          f"test {test_acc:.4f} >= 0.95, grad check {grad_err:.1e} <= 1e-4, "
          f"train {train_s:.0f}s < 600s")


def test_criterion_tsne():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    x, labels = gaussian_clusters(rng, n_per=150)  # N = 450
    emb = tsne.tsne_embed(x, perplexity=30, iterations=750, seed=1)
    emb2 = tsne.tsne_embed(x, perplexity=30, iterations=750, seed=1)
    assert np.array_equal(emb, emb2)

    d2 = tsne._pairwise_sq_dists(x)
    _, betas = tsne.conditional_probabilities(d2, 30.0)
    worst = max(abs(tsne._row_perplexity(np.delete(d2[i], i), betas[i])[0]
                    - 30.0) for i in range(len(x)))
    assert worst <= 1e-3

    score = silhouette(emb, labels)
    assert score >= 0.8
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"PASS tsne: perplexity matched to {worst:.1e} <= 1e-3, "
          f"silhouette {score:.3f} >= 0.8, deterministic, {elapsed:.0f}s < 60s")


def test_criterion_epsilon_metric():
    tr = weighing.WeighTrace(1.0, [0.0, 0.5, 0.5, 1.0])
    assert abs(weighing.epsilon(tr, weighing.EpsilonParams(1)) - 0.5) <= 1e-12
    tr2 = weighing.WeighTrace(1.0, [0.0, 0.2, 0.4, 0.6])
    assert abs(weighing.epsilon(tr2, weighing.EpsilonParams(2)) - 0.4) <= 1e-12
    with pytest.raises(weighing.ConstantTraceError):
        weighing.epsilon([1.0, 1.0, 1.0], weighing.EpsilonParams(1))
    print("PASS epsilon-metric: hand fixtures exact to 1e-12, "
          "constant-trace error raised")


def test_criterion_weighing_resolution():
    t0 = time.perf_counter()
    comp = weighing.resolution_comparison(seeds=20)
    ratio = comp.ratio
    assert ratio >= 5.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"PASS weighing-resolution: eps no-vib "
          f"{np.mean(comp.eps_no_vib):.4f} g / vib "
          f"{np.mean(comp.eps_vib):.4f} g, ratio {ratio:.1f} >= 5, "
          f"{elapsed:.0f}s < 60s")


def test_criterion_nine_combination_trends():
    t0 = time.perf_counter()
    families = weighing.nine_combo_experiment(material=weighing.SESAME,
                                              seed_count=20)
    by = {(f.tilt_deg, f.motors): np.array(f.t50_s) for f in families}

    def separated(slow, fast):
        """Mean ordering with 95% bootstrap separation of the difference."""
        assert np.mean(slow) > np.mean(fast)
        rng = np.random.default_rng(0)
        diffs = [np.mean(rng.choice(slow, len(slow)))
                 - np.mean(rng.choice(fast, len(fast))) for _ in range(500)]
        assert np.percentile(diffs, 2.5) > 0

    for angle in weighing.COMBO_ANGLES_DEG:
        separated(by[(angle, 2)], by[(angle, 4)])
        separated(by[(angle, 4)], by[(angle, 8)])
    for motors in weighing.COMBO_MOTOR_COUNTS:
        separated(by[(30.0, motors)], by[(45.0, motors)])
        separated(by[(45.0, motors)], by[(50.0, motors)])
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    t50s = {f.label: round(f.mean_t50_s, 2) for f in families}
    print(f"PASS nine-combination-trends: t50 strictly decreasing in motors "
          f"and angle, {t50s}, {elapsed:.0f}s < 120s")


def test_criterion_protocol():
    # 1e5 seeded random round-trips
    rng = np.random.default_rng(20240601)
    for _ in range(100_000):
        m = random_message(rng)
        assert msg.decode(msg.encode(m)) == m

    # exhaustive single-byte corruption of a fixed frame
    fixed = msg.encode(msg.SensorFrame(99, tuple(range(-12, 12))))
    frame = bytearray(fixed)
    attempts = 0
    for pos in range(len(frame)):
        original = frame[pos]
        for value in range(256):
            if value == original:
                continue
            frame[pos] = value
            attempts += 1
            with pytest.raises(msg.ProtocolError):
                msg.decode(bytes(frame))
        frame[pos] = original

    # byte-at-a-time fragmentation equivalence
    msgs = [random_message(rng) for _ in range(300)]
    blob = b"".join(msg.encode(m) for m in msgs)
    dec = msg.FrameDecoder()
    got = []
    for i in range(len(blob)):
        got.extend(dec.feed(blob[i:i + 1]))
    assert got == msgs

    # full transition-matrix rejection
    rejected = accepted = 0
    for current in Stage:
        for to in Stage:
            legal = (to == current + 1) or \
                    (current is Stage.DISPENSE and to is Stage.POSITION)
            result = session_step(SessionState(stage=current),
                                  msg.StageTransition(int(to)))
            if legal:
                assert result.error is None
                accepted += 1
            else:
                assert result.error is not None
                assert result.state.stage is current
                rejected += 1
    print(f"PASS protocol: 100000 round-trips exact, {attempts} corruptions "
          f"all rejected, 1-byte fragmentation equivalent, transition matrix "
          f"{accepted} legal / {rejected} rejected")


def test_criterion_end_to_end_duplex():
    t0 = time.perf_counter()
    ops = operator_sim.OperatorSkin()
    in_band = 0
    collisions_ok = True
    stages_ok = True
    errors = []
    for seed in range(50):
        r = robot.run_scripted_session(seed=seed, ops=ops)
        stages_ok &= (r.final_stage == 6)
        collisions_ok &= (r.collisions_injected == 1
                          and r.vibration_cmds_to_operator == 1)
        if abs(r.mass_error_g) <= 0.05:
            in_band += 1
        errors.append(r.mass_error_g)
    assert stages_ok
    assert in_band >= 45
    assert collisions_ok
    elapsed = time.perf_counter() - t0
    print(f"PASS end-to-end-duplex: 50/50 stage 6, {in_band}/50 within "
          f"±0.05 g of 1.00 g (errors {min(errors):+.3f}..{max(errors):+.3f}), "
          f"1 VibrationCmd per CollisionEvent, {elapsed:.0f}s")
