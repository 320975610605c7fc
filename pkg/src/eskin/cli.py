"""Command-line entry point wiring all modules together.

Verbs: dataset, train, eval, tsne, weigh, interference, serve. Common
flags: --seed, --config, --out. Exit codes: 0 success, 1 usage error,
2 runtime failure. Every command is deterministic given --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cnn, operator_sim, robot, sensing, skin, tsne, weighing

CONFIG_SCHEMA = {
    "seed": int,
    "out_dir": str,
    "dataset": {"per_class": int},
    "noise": {"gaussian_sigma_ut": float, "quantization_step_ut": float},
    "training": {"learning_rate": float, "batch_size": int, "epochs": int},
    "weighing": {"seeds": int, "load_g": float, "material": str,
                 "ramp_s": float},
    "serve": {"host": str, "port": int, "seeds": int},
}


class ConfigError(ValueError):
    pass


def validate_config(raw: dict, schema=None, path="") -> dict:
    """Reject unknown keys and wrong value types, recursively."""
    schema = CONFIG_SCHEMA if schema is None else schema
    if not isinstance(raw, dict):
        raise ConfigError(f"config section {path or '<root>'} must be an object")
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {path + key!r}")
        expected = schema[key]
        if isinstance(expected, dict):
            validate_config(value, expected, path + key + ".")
        elif expected is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"config key {path + key!r} must be a number")
        elif not isinstance(value, expected) or isinstance(value, bool):
            raise ConfigError(
                f"config key {path + key!r} must be {expected.__name__}")
    return raw


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as f:
        return validate_config(json.load(f))


def cfg_get(config: dict, section: str, key: str, default):
    return config.get(section, {}).get(key, default)


def _out_dir(args, config) -> Path:
    out = Path(args.out or config.get("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, config) -> int:
    if args.seed is not None:
        return args.seed
    return config.get("seed", 0)


def _noise(config, seed) -> sensing.NoiseModel:
    return sensing.NoiseModel(
        gaussian_sigma_ut=cfg_get(config, "noise", "gaussian_sigma_ut", 0.1),
        quantization_step_ut=cfg_get(config, "noise",
                                     "quantization_step_ut", 0.01),
        rng_seed=seed)


# ---------------------------------------------------------------------------
# Commands

def cmd_dataset(args, config) -> int:
    seed = _seed(args, config)
    out = _out_dir(args, config)
    per_class = args.per_class or cfg_get(config, "dataset", "per_class", 200)
    ds = sensing.build_dataset(per_class=per_class, seed=seed,
                               noise=_noise(config, seed))
    path = out / "dataset.eskd"
    sensing.save_dataset(path, ds)
    print(f"dataset: {len(ds.labels)} windows "
          f"({ds.n_train} train / {len(ds.labels) - ds.n_train} test) "
          f"-> {path}")
    return 0


def cmd_train(args, config) -> int:
    seed = _seed(args, config)
    out = _out_dir(args, config)
    ds = sensing.load_dataset(args.dataset or out / "dataset.eskd")
    cfg = cnn.TrainConfig(
        learning_rate=cfg_get(config, "training", "learning_rate", 0.01),
        batch_size=cfg_get(config, "training", "batch_size", 32),
        epochs=args.epochs or cfg_get(config, "training", "epochs", 10),
        seed=seed)
    (tr_x, tr_y), (te_x, te_y) = ds.train, ds.test

    def log(epoch, hist):
        print(f"epoch {epoch}: train_acc {hist.train_acc[-1]:.4f} "
              f"loss {hist.train_loss[-1]:.4f} "
              f"test_acc {hist.test_acc[-1]:.4f}")

    model, hist = cnn.train(tr_x, tr_y, cfg, eval_set=(te_x, te_y), log=log)
    cnn.save_checkpoint(out / "model.eskm", model)
    (out / "metrics.jsonl").write_text(hist.to_jsonl())
    print(f"checkpoint -> {out / 'model.eskm'}")
    return 0


def cmd_eval(args, config) -> int:
    out = _out_dir(args, config)
    ds = sensing.load_dataset(args.dataset or out / "dataset.eskd")
    model = cnn.load_checkpoint(args.model or out / "model.eskm")
    te_x, te_y = ds.test
    acc, confusion = cnn.evaluate(model, te_x, te_y)
    report = {"test_acc": acc, "n_test": len(te_y),
              "confusion": confusion.tolist()}
    (out / "eval.json").write_text(json.dumps(report, indent=2))
    print(f"test accuracy {acc:.4f} on {len(te_y)} windows")
    return 0


def cmd_tsne(args, config) -> int:
    seed = _seed(args, config)
    out = _out_dir(args, config)
    ds = sensing.load_dataset(args.dataset or out / "dataset.eskd")
    model = cnn.load_checkpoint(args.model or out / "model.eskm")
    te_x, te_y = ds.test
    n = min(args.n or len(te_y), len(te_y))
    feats = model.hidden_features(te_x[:n])
    emb = tsne.tsne_embed(feats, perplexity=args.perplexity,
                          iterations=args.iterations, seed=seed)
    path = out / "embedding.csv"
    path.write_text(tsne.embedding_to_csv(emb, te_y[:n]))
    print(f"embedded {n} windows -> {path}")
    return 0


def cmd_weigh(args, config) -> int:
    seed = _seed(args, config)
    out = _out_dir(args, config)
    seeds = args.seeds or cfg_get(config, "weighing", "seeds", 20)
    load_g = cfg_get(config, "weighing", "load_g", 10.0)
    ramp_s = cfg_get(config, "weighing", "ramp_s", 20.0)
    mat_name = cfg_get(config, "weighing", "material", "sesame")
    material = weighing.MATERIALS[mat_name]

    from . import actuation
    program = actuation.preset(args.vib_preset, n=args.vib_n,
                               duty=args.vib_duty, duration_ms=ramp_s * 1e3)
    (out / "program.json").write_text(actuation.program_to_json(program))

    comp = weighing.resolution_comparison(seeds=seeds, load_g=load_g,
                                          ramp_s=ramp_s, base_seed=seed,
                                          program=program)
    families = weighing.nine_combo_experiment(material=material,
                                              seed_count=seeds,
                                              load_g=load_g, base_seed=seed)
    lines = []
    for fam in families:
        for i, (trace, t50) in enumerate(zip(fam.traces, fam.t50_s)):
            eps = weighing.epsilon(trace)
            lines.append(json.dumps({
                "label": fam.label, "tilt_deg": fam.tilt_deg,
                "motors": fam.motors, "seed": seed + i,
                "eps": round(eps, 6), "t50": t50}))
            csv = "\n".join(f"{t:.2f},{m:.6f}"
                            for t, m in zip(trace.t_s, trace.masses_g))
            (out / f"trace_label{fam.label}_seed{i}.csv").write_text(
                "t,mass\n" + csv + "\n")
    (out / "weigh_summary.jsonl").write_text("\n".join(lines) + "\n")

    report = {
        "flour_eps_no_vib_mean": float(np.mean(comp.eps_no_vib)),
        "flour_eps_vib_mean": float(np.mean(comp.eps_vib)),
        "resolution_ratio": comp.ratio,
        "combo_mean_t50": {str(f.label): f.mean_t50_s for f in families},
    }
    (out / "weigh_report.json").write_text(json.dumps(report, indent=2))
    print(f"resolution ratio (no-vib / 8-motor 50%): {comp.ratio:.2f}")
    for fam in families:
        print(f"  label {fam.label} ({fam.tilt_deg:.0f} deg, "
              f"{fam.motors} motors): mean t50 {fam.mean_t50_s:.2f} s")
    return 0


def cmd_interference(args, config) -> int:
    out = _out_dir(args, config)
    geom = skin.SkinGeometry()
    film = skin.make_film(geom)
    res = skin.interference_experiment(geom, film,
                                       press_force_n=args.press_force)
    rows = ["t,bx,by,bz,stage"]
    for name, sl in res.stage_slices.items():
        for i in range(sl.start, sl.stop):
            b = res.readings_ut[i]
            rows.append(f"{res.t_s[i]:.4f},{b[0]:.4f},{b[1]:.4f},"
                        f"{b[2]:.4f},{name}")
    (out / "interference.csv").write_text("\n".join(rows) + "\n")
    report = {"max_delta_ut": res.max_delta_ut,
              "motor_press_ratio": (res.motor_press_ratio
                                    if res.max_delta_ut["press"] > 0
                                    else None),
              "probe_sensor": res.probe_sensor}
    (out / "interference.json").write_text(json.dumps(report, indent=2))
    print("max |dB| per stage:",
          {k: round(v, 4) for k, v in res.max_delta_ut.items()})
    if report["motor_press_ratio"] is not None:
        print(f"motor/press ratio: {res.motor_press_ratio:.3f}")
    return 0


def cmd_serve(args, config) -> int:
    seed = _seed(args, config)
    out = _out_dir(args, config)
    if args.script:
        script = (robot.HAPPY_PATH_SCRIPT if args.script == "builtin:happy"
                  else robot.load_script(args.script))
        result = robot.run_scripted_session(script=script, seed=seed)
        log_path = out / "session_log.jsonl"
        with open(log_path, "w") as f:
            for t, direction, payload in result.event_log:
                f.write(json.dumps({"t": t, "dir": direction,
                                    "msg": repr(payload)}) + "\n")
        summary = {
            "final_stage": result.final_stage,
            "final_mass_g": round(result.final_mass_g, 4),
            "target_g": result.target_g,
            "mass_error_g": round(result.mass_error_g, 4),
            "collisions": result.collisions_injected,
            "vibration_cmds_to_operator": result.vibration_cmds_to_operator,
            "sim_duration_s": round(result.duration_s, 2),
        }
        (out / "session_summary.json").write_text(
            json.dumps(summary, indent=2))
        print(json.dumps(summary, indent=2))
        ok = (result.final_stage == 6 and result.target_g is not None
              and abs(result.mass_error_g) <= 0.05)
        return 0 if ok else 2

    # live mode: robot endpoint + websocket gateway
    import asyncio

    from .protocol.gateway import GatewayServer
    from .protocol.transport import FrameConnection, loopback_pair

    host = args.host or cfg_get(config, "serve", "host", "127.0.0.1")
    port = args.port or cfg_get(config, "serve", "port", 8765)
    a, b = loopback_pair()
    bot = robot.RobotEndpoint(FrameConnection(a), seed=seed)
    gateway = GatewayServer(bot, b, host=host, port=port)
    print(f"operator gateway on ws://{host}:{port} (ctrl-c to stop)")
    try:
        asyncio.run(gateway.serve(duration_s=args.duration))
    except KeyboardInterrupt:
        pass
    if gateway.had_client:
        print("operator disconnected; session ended")
        return 2
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eskin",
        description="Dual-modal e-skin twin: sensing, feedback, duplex link")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="generate the synthetic grasp dataset")
    p.add_argument("--per-class", type=int, default=None)

    p = sub.add_parser("train", help="train the tactile classifier")
    p.add_argument("--dataset", default=None)
    p.add_argument("--epochs", type=int, default=None)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint")
    p.add_argument("--dataset", default=None)
    p.add_argument("--model", default=None)

    p = sub.add_parser("tsne", help="embed learned features in 2-D")
    p.add_argument("--dataset", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=750)

    p = sub.add_parser("weigh", help="vibration-controlled weighing study")
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--vib-preset", default="n-motors",
                   help="vibration pattern for the resolution comparison")
    p.add_argument("--vib-n", type=int, default=8)
    p.add_argument("--vib-duty", type=float, default=0.5)

    p = sub.add_parser("interference", help="motor-vs-press field study")
    p.add_argument("--press-force", type=float, default=4.0)

    p = sub.add_parser("serve", help="run the duplex session")
    p.add_argument("--script", default=None,
                   help="operator script (JSONL path or 'builtin:happy')")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--duration", type=float, default=None,
                   help="live-mode time limit in seconds")
    return parser


COMMANDS = {
    "dataset": cmd_dataset,
    "train": cmd_train,
    "eval": cmd_eval,
    "tsne": cmd_tsne,
    "weigh": cmd_weigh,
    "interference": cmd_interference,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        config = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args, config)
    except Exception as exc:  # runtime failure contract: exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
