"""Smoke test for the ocdm extension module.

Build first:  pip install maturin && maturin develop -m crates/py/Cargo.toml
"""

import math
import sys
import tempfile

import ocdm


def check(cond, what):
    if not cond:
        sys.exit(f"FAIL: {what}")
    print(f"ok  {what}")


def main():
    check(set(ocdm.STRATEGIES) >= {"ocdm", "bat_ocdm", "reservoir"}, "strategy names")

    # distributions
    check(abs(ocdm.kl_distance([0.5, 0.5], [0.5, 0.5])) < 1e-15, "kl of equal distributions is zero")
    p = ocdm.empirical_distribution([3, 1, 0])
    check(abs(sum(p) - 1.0) < 1e-12 and p[0] > p[1] > p[2] > 0, "empirical distribution")
    t = ocdm.target_distribution([9, 1], rho=1.0)
    check(abs(t[0] - 0.9) < 1e-6, "rho = 1 target follows counts")

    # greedy update: two samples of label 0, one of label 1, drop one
    mem = ocdm.ReplayMemory(capacity=2, num_labels=2)
    mem.extend([
        ocdm.Sample([0.0], [True, False], sample_id=0),
        ocdm.Sample([0.0], [True, False], sample_id=1),
        ocdm.Sample([0.0], [False, True], sample_id=2),
    ])
    removed = mem.update(1)
    check([s.sample_id for s in removed] == [0], "update removes the lowest id among ties")
    check(sorted(mem.sample_ids()) == [1, 2] and mem.label_counts() == [1, 1], "memory is balanced")
    check(mem.eval_count == ocdm.memory_update_cost(3, 1) == 3, "evaluation count")

    # strategies on a synthetic stream
    stream = ocdm.synthetic_stream("skewed", tasks=4, train_per_task=100, test_per_task=0,
                                   num_labels=6, num_features=5, seed=1)
    train, _ = stream.task(0)
    check(stream.num_tasks == 4 and len(train) == 100, "synthetic stream shape")
    bat = ocdm.run_strategy("bat_ocdm", stream, memory_size=40, batch_size=8, seed=1)
    check(bat.task_counts == [10, 10, 10, 10], "bat_ocdm splits memory per task")
    oc = ocdm.run_strategy("ocdm", stream, memory_size=40, batch_size=8, seed=1)
    res = ocdm.run_strategy("reservoir", stream, memory_size=40, seed=1)
    check(oc.kl_to_target < res.kl_to_target, "ocdm memory closer to uniform than reservoir")
    check(oc.total_evals > bat.total_evals > 0, "bat_ocdm evaluates fewer KL terms")

    # metrics
    scores = [[0.8, 0.0], [0.4, 0.6]]
    check(abs(ocdm.average_macro_f1(scores) - 0.5) < 1e-12, "average macro-F1")
    check(abs(ocdm.average_forgetting(scores) - 0.5) < 1e-12, "average forgetting")
    check(ocdm.macro_f1([[True, False], [False, True]], [[True, False], [True, True]]) == (1.0 + 2 / 3) / 2, "macro-F1")

    rows = ocdm.scaling_probe("bat_ocdm", [2, 4], samples_per_task=30, memory_size=10)
    check([r[0] for r in rows] == [2, 4] and rows[0][1] < rows[1][1], "scaling probe")

    with tempfile.TemporaryDirectory() as out:
        runs = ocdm.run_experiment(overrides=[
            "tasks=2", "train_per_task=40", "test_per_task=20", "num_features=8",
            "memory_size=20", "batch_size=4", "epochs=1", "hidden=8",
            "strategies=finetune,ocdm", f"out={out}",
        ])
        check([r.strategy for r in runs] == ["finetune", "ocdm"], "experiment runs")
        check(all(r.s_t is not None and not math.isnan(r.s_t) for r in runs), "experiment metrics")

    try:
        ocdm.run_strategy("nope", stream, memory_size=10)
    except ValueError:
        check(True, "unknown strategy raises ValueError")
    else:
        sys.exit("FAIL: unknown strategy accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
