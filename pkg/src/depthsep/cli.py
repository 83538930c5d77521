"""Command-line interface.

Subcommands: build-instance, eval, compile-threshold, reduce,
verify-lemmas, train-baseline, report, verify-all.  Outputs are JSON
reports and CSV tables (UTF-8, header row, decimal point); identical flags
and seeds produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import harness, instance, networks, reduction, threshold, training


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        click.echo(text, nl=not text.endswith("\n"))
    else:
        Path(path).write_text(text, encoding="utf-8")


@click.group()
def main():
    """Verification lab for the hard-parity construction."""


@main.command("build-instance")
@click.option("--d", "d", type=int, required=True, help="Pair-count parameter; input dim is 4d.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-attempts", type=int, default=None, help="Greedy packing proposal budget.")
@click.option("--out", type=str, default="-", help="Instance JSON path ('-' for stdout).")
@click.option("--samples", type=int, default=0, help="Also draw this many support samples.")
@click.option("--samples-out", type=str, default=None, help="CSV path for the samples.")
def build_instance_cmd(d, seed, max_attempts, out, samples, samples_out):
    """Construct the packing, matching, and support description."""
    spec = instance.build_instance(d, seed=seed, max_attempts=max_attempts)
    _write(out, instance.spec_to_json(spec))
    if samples > 0:
        batch = instance.sample_a4d(spec, samples, seed=seed + 1)
        _write(samples_out or "-", instance.samples_to_csv(batch))


@main.command("eval")
@click.option("--d", "d", type=int, default=None, help="Evaluate the hard target at dimension d.")
@click.option("--net", "net_path", type=str, default=None, help="Evaluate a network JSON instead.")
@click.option("--point", "points", type=str, multiple=True, required=True,
              help="Comma-separated coordinates; repeatable.")
def eval_cmd(d, net_path, points):
    """Evaluate the hard target or a serialized network at given points."""
    if (d is None) == (net_path is None):
        raise click.UsageError("pass exactly one of --d or --net")
    vals = []
    for text in points:
        p = np.array([float(t) for t in text.split(",")])
        if d is not None:
            vals.append(instance.eval_f(d, p))
        else:
            net = networks.network_from_json(Path(net_path).read_text(encoding="utf-8"))
            vals.append(net.evaluate(p))
    click.echo(json.dumps({"values": vals}, sort_keys=True))


@main.command("compile-threshold")
@click.option("--net", "net_path", type=str, required=True, help="Depth-2 network JSON.")
@click.option("--delta", type=float, required=True, help="Target sup accuracy on the Boolean cube.")
@click.option("--out", type=str, default="-", help="Compiled network JSON path.")
@click.option("--report", "report_path", type=str, default=None, help="JSON report path.")
def compile_threshold_cmd(net_path, delta, out, report_path):
    """Compile a depth-2 network into a depth-2 threshold network."""
    net = networks.network_from_json(Path(net_path).read_text(encoding="utf-8"))
    compiled = threshold.compile_network(net, delta)
    _write(out, networks.network_to_json(compiled))
    report = {
        "delta": delta,
        "width_in": list(net.widths),
        "width_out": list(compiled.widths),
        "segments_per_neuron": compiled.widths[0] // max(net.widths[0], 1),
        "max_weight_out": compiled.max_weight,
    }
    if net.input_dim <= 12:
        report["certified_error"] = threshold.boolean_cube_max_error(net, compiled)
    if report_path:
        _write(report_path, json.dumps(report, sort_keys=True))
    else:
        click.echo(json.dumps(report, sort_keys=True))


@main.command("reduce")
@click.option("--d", "d", type=int, required=True)
@click.option("--D", "big_d", type=int, default=None, help="Padding length; defaults to 100 d.")
@click.option("--blocks", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--base", "base_path", type=str, default=None,
              help="Depth-2 base network JSON on 2(4d+D) inputs; random if omitted.")
@click.option("--base-width", type=int, default=8, show_default=True)
@click.option("--out", type=str, default=None, help="Averaged network JSON path.")
def reduce_cmd(d, big_d, blocks, seed, base_path, base_width, out):
    """Build the averaged re-randomized network and spot-check parity."""
    cfg = reduction.ReductionConfig(d=d, D=big_d, n_blocks=blocks, seed=seed)
    if base_path:
        base = networks.network_from_json(Path(base_path).read_text(encoding="utf-8"))
    else:
        rng = np.random.default_rng([seed, 99])
        n_in = 2 * cfg.expanded_dim
        base = networks.DenseNetwork(
            n_in,
            ((rng.normal(0, 0.5, size=(base_width, n_in)), rng.normal(0, 0.5, size=base_width)),),
            rng.normal(0, 0.5, size=base_width),
            0.0,
            networks.RELU,
        )
    averaged, records = reduction.build_averaged_network(base, cfg, seed=seed)
    if out:
        _write(out, networks.network_to_json(averaged))
    rng = np.random.default_rng([seed, 100])
    n_check = 200
    xs = rng.integers(0, 2, size=(n_check, d), dtype=np.int8)
    ys = rng.integers(0, 2, size=(n_check, d), dtype=np.int8)
    worst = 0.0
    for x, y in zip(xs, ys):
        direct = np.mean(
            [base.evaluate(np.concatenate(reduction.expand_pair(x, y, rec)).astype(float))
             for rec in records]
        )
        via_net = averaged.evaluate(np.concatenate([x, y]).astype(float))
        worst = max(worst, abs(direct - via_net))
    bound = reduction.output_bound(base)
    report = {
        "d": d,
        "D": cfg.D,
        "blocks": blocks,
        "width": list(averaged.widths),
        "block_equivalence_error": worst,
        "base_output_bound": bound,
        "hoeffding_blocks_for_union_bound": reduction.hoeffding_block_count(bound, d),
        "bound_armed": cfg.bound_armed,
    }
    click.echo(json.dumps(report, sort_keys=True))


def _parse_a1(text: str) -> list[tuple[int, int]]:
    left, right = text.split("x")
    ds = [int(t) for t in left.split(",") if t]
    Ds = [int(t) for t in right.split(",") if t]
    return [(d, D) for d in ds for D in Ds]


@main.command("verify-lemmas")
@click.option("--a1", "a1_spec", type=str, default=None,
              help="Ratio bound sweep as 'd1,d2x D1,D2,...', e.g. '4,8x4,8,16'.")
@click.option("--a2", "a2_spec", type=str, default=None,
              help="MGF bound sweep as 'd<=K' (s defaults to 1/(48 d)).")
@click.option("--l2", "l2_spec", type=str, default=None,
              help="Exact norm check as 'd=1,D=100' (sweeps all 4^d inputs).")
@click.option("--out", type=str, default=None, help="JSON report path.")
def verify_lemmas_cmd(a1_spec, a2_spec, l2_spec, out):
    """Exact-arithmetic verification of the combinatorial bounds."""
    if not any((a1_spec, a2_spec, l2_spec)):
        raise click.UsageError("pass at least one of --a1 / --a2 / --l2")
    reports = []
    if a1_spec:
        for d, D in _parse_a1(a1_spec):
            reports.append({"lemma": "a1", **reduction.multinomial_square_ratio_report(d, D)})
    if a2_spec:
        k = int(a2_spec.replace("d<=", "").strip())
        for d in range(1, k + 1):
            reports.append({"lemma": "a2", **reduction.mgf_bound_report(d, Fraction(1, 48 * d))})
    if l2_spec:
        params = dict(part.split("=") for part in l2_spec.split(","))
        d, D = int(params["d"]), int(params["D"])
        bound = Fraction(64, 4 ** (4 * d + D))
        worst = Fraction(0)
        ok = True
        for xi in range(2**d):
            for yi in range(2**d):
                xb = [(xi >> j) & 1 for j in range(d)]
                yb = [(yi >> j) & 1 for j in range(d)]
                val = reduction.exact_l2_norm_squared(xb, yb, D)
                worst = max(worst, val / bound)
                ok = ok and val <= bound
        reports.append(
            {
                "lemma": "l2",
                "check": "pair-law-l2-norm",
                "parameters": {"d": d, "D": D},
                "max_ratio": float(worst),
                "bound_armed": D >= 100 * d,
                "pass": ok if D >= 100 * d else True,
            }
        )
    doc = json.dumps({"reports": reports, "pass": all(r["pass"] for r in reports)}, sort_keys=True)
    _write(out, doc) if out else click.echo(doc)
    if not all(r["pass"] for r in reports):
        sys.exit(1)


def _load_train_config(config_path: str | None, **overrides) -> training.TrainConfig:
    base = {}
    if config_path:
        base = json.loads(Path(config_path).read_text(encoding="utf-8"))
    base.update({k: v for k, v in overrides.items() if v is not None})
    return training.TrainConfig(**base)


@main.command("train-baseline")
@click.option("--d", "d", type=int, required=True)
@click.option("--width", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=str, default=None, help="TrainConfig JSON file.")
@click.option("--out", type=str, default=None, help="JSON report path.")
def train_baseline_cmd(d, width, epochs, seed, config_path, out):
    """Train the depth-2 baseline and report losses."""
    cfg = _load_train_config(config_path, width=width, epochs=epochs, seed=seed)
    spec = instance.build_instance(d, seed=seed)
    result = training.train_depth2(spec, cfg)
    report = {
        "config": dataclasses.asdict(cfg),
        "d": d,
        "history": result.history,
        "best_loss": result.best_loss,
        "diverged": result.diverged,
    }
    if not result.diverged:
        mean, se = training.estimate_population_loss(result.network, spec, 20_000, seed=seed + 1)
        report["population_loss"] = mean
        report["population_stderr"] = se
    doc = json.dumps(report, sort_keys=True)
    _write(out, doc) if out else click.echo(doc)


@main.command("report")
@click.option("--d", "d", type=int, required=True)
@click.option("--widths", type=str, default="4,16,64", show_default=True)
@click.option("--epochs", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=str, default=None, help="TrainConfig JSON file.")
@click.option("--out", type=str, required=True, help="Output prefix; writes <out>.csv and <out>.json.")
def report_cmd(d, widths, epochs, seed, config_path, out):
    """Width sweep with trivial and exact reference rows."""
    cfg = _load_train_config(config_path, width=1, epochs=epochs, seed=seed)
    spec = instance.build_instance(d, seed=seed)
    width_list = [int(t) for t in widths.split(",") if t]
    rep = harness.run_separation_experiment(spec, width_list, cfg, seed=seed)
    Path(out + ".csv").write_text(rep.to_csv(), encoding="utf-8")
    Path(out + ".json").write_text(rep.to_json(), encoding="utf-8")
    click.echo(f"wrote {out}.csv and {out}.json")


@main.command("verify-all")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--only", type=str, default=None,
              help=f"Comma-separated subset of: {', '.join(harness.CHECK_NAMES)}.")
@click.option("--instance", "instance_path", type=str, default=None,
              help="Run the packing checks against this instance JSON.")
@click.option("--out", type=str, default=None, help="JSON summary path.")
def verify_all_cmd(seed, only, instance_path, out):
    """Run the full verification battery; nonzero exit on any failure."""
    spec_override = None
    if instance_path:
        spec_override = instance.spec_from_json(Path(instance_path).read_text(encoding="utf-8"))
    only_list = [t for t in only.split(",") if t] if only else None
    summary = harness.verify_all(seed=seed, only=only_list, spec_override=spec_override)
    doc = json.dumps(summary, sort_keys=True, indent=2)
    _write(out, doc) if out else click.echo(doc)
    if not summary["pass"]:
        sys.exit(1)


if __name__ == "__main__":
    main()
