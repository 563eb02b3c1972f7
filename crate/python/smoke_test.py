"""Smoke test for the vvloop_py extension.

Build first:
    cargo build --release -p vvloop-py --features extension-module
then:
    python3 python/smoke_test.py [path/to/libvvloop_py.so]
"""

import importlib.util
import json
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load(lib):
    spec = importlib.util.spec_from_file_location("vvloop_py", lib)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main():
    lib = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "target/release/libvvloop_py.so"
    vv = load(lib)
    scenarios = ROOT / "scenarios"

    ghost = (scenarios / "ghost_obstacle_attack.ini").read_text()
    assert vv.validate(ghost) == "ghost_obstacle_attack"
    try:
        vv.validate("[scenario]\nbase = congested\nattack = ghost\n")
    except ValueError as e:
        print("rejected as expected:", e)
    else:
        raise AssertionError("pairing violation accepted")

    run = json.loads(vv.run_scenario(ghost, 5))
    assert run["scenario_id"] == "ghost_obstacle_attack" and run["seed"] == 5
    again = json.loads(vv.run_scenario(ghost, 5))
    assert run == again, "runs are deterministic"
    print("run:", run["termination"], "ticks", run["ticks"], "unsafe ticks", run["unsafe_tick_count"])

    with tempfile.TemporaryDirectory() as out:
        summary, report = vv.campaign(str(scenarios), runs=2, base_seed=1, parallelism=2, out_dir=out, format="csv")
        traces = list(pathlib.Path(out).glob("*/*.jsonl"))
        assert len(traces) == 12, len(traces)
    summary = json.loads(summary)
    assert report.startswith("scenario,runs,")
    assert len(summary["rows"]) == 6
    print(report, end="")
    print("smoke test ok")


if __name__ == "__main__":
    main()
