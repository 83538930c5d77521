"""Experiment driver: width sweeps, sup-error measurement, and the
all-in-one verification battery behind ``verify-all``."""

from __future__ import annotations

import dataclasses
import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import depth3, instance, networks, reduction, threshold, training

__all__ = [
    "ExperimentReport",
    "measure_sup_error",
    "run_separation_experiment",
    "verify_all",
    "CHECK_NAMES",
]


def measure_sup_error(
    net: networks.DenseNetwork,
    spec: instance.InstanceSpec,
    n: int,
    seed: int,
    batch: int = 10_000,
) -> float:
    """Max |net - target| over n fresh support samples, evaluated in chunks
    so wide networks stay within memory."""
    worst = 0.0
    drawn = 0
    chunk_id = 0
    while drawn < n:
        k = min(batch, n - drawn)
        samples = instance.sample_a4d(spec, k, seed=int(seed + 104729 * chunk_id))
        preds = net.evaluate_batch(samples.points)
        worst = max(worst, float(np.abs(preds - samples.labels).max()))
        drawn += k
        chunk_id += 1
    return worst


@dataclass
class ExperimentReport:
    d: int
    config: dict
    rows: list[dict]

    _COLUMNS = (
        "label",
        "width",
        "final_loss",
        "best_loss",
        "population_loss",
        "population_stderr",
        "diverged",
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self._COLUMNS) + "\n")
        for row in self.rows:
            cells = []
            for col in self._COLUMNS:
                val = row.get(col)
                if val is None:
                    cells.append("")
                elif isinstance(val, bool):
                    cells.append("true" if val else "false")
                elif isinstance(val, float):
                    cells.append(repr(val))
                else:
                    cells.append(str(val))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"d": self.d, "config": self.config, "rows": self.rows}, sort_keys=True
        )


def run_separation_experiment(
    spec: instance.InstanceSpec,
    widths: list[int],
    cfg_template: training.TrainConfig,
    n_eval: int = 20_000,
    seed: int = 0,
) -> ExperimentReport:
    """Train the depth-2 baseline at each width and tabulate final losses
    next to the constant-1/2 line (exactly 1/4) and the exact depth-3 line
    (zero).  Widths are sorted ascending in the output."""
    rows: list[dict] = []

    const = training.constant_network(4 * spec.d, 0.5)
    mean, se = training.estimate_population_loss(const, spec, n_eval, seed=seed + 1)
    rows.append(
        {
            "label": "constant-half",
            "width": 1,
            "final_loss": None,
            "best_loss": None,
            "population_loss": mean,
            "population_stderr": se,
            "diverged": False,
        }
    )
    exact = depth3.build_exact_relu(spec.d)
    mean, se = training.estimate_population_loss(exact, spec, n_eval, seed=seed + 2)
    rows.append(
        {
            "label": "exact-depth3",
            "width": max(exact.widths),
            "final_loss": None,
            "best_loss": None,
            "population_loss": mean,
            "population_stderr": se,
            "diverged": False,
        }
    )
    for w in sorted(widths):
        cfg = dataclasses.replace(cfg_template, width=w)
        result = training.train_depth2(spec, cfg)
        if result.diverged:
            rows.append(
                {
                    "label": f"trained-w{w}",
                    "width": w,
                    "final_loss": None,
                    "best_loss": None,
                    "population_loss": None,
                    "population_stderr": None,
                    "diverged": True,
                }
            )
            continue
        mean, se = training.estimate_population_loss(result.network, spec, n_eval, seed=seed + 3)
        rows.append(
            {
                "label": f"trained-w{w}",
                "width": w,
                "final_loss": result.history[-1],
                "best_loss": result.best_loss,
                "population_loss": mean,
                "population_stderr": se,
                "diverged": False,
            }
        )
    return ExperimentReport(d=spec.d, config=dataclasses.asdict(cfg_template), rows=rows)


# ---------------------------------------------------------------------------
# verification battery
# ---------------------------------------------------------------------------


def _check_packing(seed: int, spec_override=None) -> dict:
    if spec_override is not None:
        spec_override.packing.validate()
        return {"detail": "override instance packing invariants hold"}
    for d in (1, 2, 3):
        spec = instance.build_instance(d, seed=seed + d)
        spec.packing.validate()
        again = instance.build_instance(d, seed=seed + d)
        if not np.array_equal(spec.packing.points, again.packing.points):
            raise AssertionError(f"packing not deterministic at d={d}")
    return {"detail": "d=1..3 invariants and determinism hold"}


def _check_centers(seed: int) -> dict:
    for d in (1, 2, 3):
        spec = instance.build_instance(d, seed=seed + d)
        centers = spec.centers()
        labels = instance.eval_f_batch(d, centers)
        for i in range(spec.n_components):
            bits = spec.component_bits(i)
            expected = int(np.dot(bits[:d], bits[d:])) & 1
            if labels[i] != expected:
                raise AssertionError(f"center value mismatch at d={d}, component {i}")
    return {"detail": "center values equal matched-bit parity for d=1..3"}


def _check_exact_net(seed: int) -> dict:
    worst = 0.0
    for d in (1, 2, 3):
        spec = instance.build_instance(d, seed=seed + d)
        net = depth3.build_exact_relu(d)
        centers = spec.centers()
        err_c = float(
            np.abs(net.evaluate_batch(centers) - instance.eval_f_batch(d, centers)).max()
        )
        err_s = measure_sup_error(net, spec, 20_000, seed=seed + 10 * d)
        worst = max(worst, err_c, err_s)
    if worst > 1e-9:
        raise AssertionError(f"exact network error {worst:.2e} above 1e-9")
    return {"detail": f"max error {worst:.2e} over centers and samples, d=1..3"}


def _check_generic_net(seed: int) -> dict:
    d, eps = 2, 0.1
    spec = instance.build_instance(d, seed=seed + 5)
    report = depth3.build_generic(d, eps)
    err = measure_sup_error(report.net, spec, 20_000, seed=seed + 6)
    if err > eps:
        raise AssertionError(f"generic builder sup error {err:.3f} > {eps}")
    if report.widths[0] > 40 * d * d / eps:
        raise AssertionError("layer-1 width accounting violated")
    if report.max_weights[1] > 40 * d / eps**2:
        raise AssertionError("layer-2 weight accounting violated")
    return {"detail": f"d={d}, eps={eps}: sup error {err:.4f}, widths {report.widths}"}


def _check_compiler_scalar(seed: int) -> dict:
    net, plan = threshold.compile_scalar(networks.RELU, R=10.0, delta=0.01)
    xs = np.linspace(-10.0, 10.0, 100_001)
    err = float(np.abs(net.evaluate_batch(xs[:, None]) - np.maximum(xs, 0.0)).max())
    if err > 0.01:
        raise AssertionError(f"scalar compile error {err:.4f} > 0.01")
    if plan.n_segments > 2001:
        raise AssertionError(f"{plan.n_segments} segments exceed 2001")
    return {"detail": f"error {err:.5f}, {plan.n_segments} segments"}


def _check_compiler_network(seed: int) -> dict:
    rng = np.random.default_rng(seed + 7)
    worst = 0.0
    for _ in range(3):
        W = rng.uniform(-2, 2, size=(8, 8))
        b = rng.uniform(-2, 2, size=8)
        v = rng.uniform(-2, 2, size=8)
        net = networks.DenseNetwork(8, ((W, b),), v, float(rng.uniform(-2, 2)), networks.RELU)
        compiled = threshold.compile_network(net, delta=0.05)
        worst = max(worst, threshold.boolean_cube_max_error(net, compiled))
    if worst > 0.05:
        raise AssertionError(f"network compile error {worst:.4f} > 0.05")
    return {"detail": f"max exhaustive error {worst:.4f} over 3 random nets"}


def _check_ip_preservation(seed: int) -> dict:
    bad = reduction.verify_ip_preservation(100_000, seed=seed)
    if bad:
        raise AssertionError(f"{bad} parity violations")
    return {"detail": "100000 randomized trials, zero parity violations"}


def _check_a1(seed: int) -> dict:
    reports = [
        reduction.multinomial_square_ratio_report(4, 4),
        reduction.multinomial_square_ratio_report(4, 8),
    ]
    worst = max(r["max_ratio"] for r in reports)
    if not all(r["pass"] for r in reports) or worst >= 1.0:
        raise AssertionError(f"ratio bound fails, max ratio {worst}")
    return {"detail": f"max LHS/RHS ratio {worst:.4f} at (d,D) in {{(4,4),(4,8)}}"}


def _check_a2(seed: int) -> dict:
    worst = 0.0
    for d in (1, 2):
        rep = reduction.mgf_bound_report(d, Fraction(1, 48 * d))
        if not rep["pass"]:
            raise AssertionError(f"mgf bound fails at d={d}")
        worst = max(worst, rep["max_ratio"])
    return {"detail": f"max E/RHS ratio {worst:.4f} for d=1,2"}


def _check_l2(seed: int) -> dict:
    bound = Fraction(64, 4**104)
    worst = Fraction(0)
    for xb in ((0,), (1,)):
        for yb in ((0,), (1,)):
            val = reduction.exact_l2_norm_squared(xb, yb, D=100)
            worst = max(worst, val / bound)
            if val > bound:
                raise AssertionError(f"l2 bound fails at (x,y)=({xb},{yb})")
    return {"detail": f"max l2^2/bound ratio {float(worst):.4f} at d=1, D=100"}


def _check_equivalences(seed: int) -> dict:
    rng = np.random.default_rng(seed + 11)
    W = rng.normal(size=(8, 4))
    b = rng.normal(size=8)
    v = rng.normal(size=8)
    net = networks.DenseNetwork(4, ((W, b),), v, 0.3, networks.RELU)
    Z = rng.normal(size=(2000, 4))
    c = rng.normal(size=4)
    shifted = networks.absorb_input_shift(net, c)
    err = float(np.abs(shifted.evaluate_batch(Z) - net.evaluate_batch(Z + c)).max())
    P = np.eye(4)[[1, 0, 3, 2]]
    mapped = networks.absorb_input_map(net, P, np.zeros(4))
    err = max(err, float(np.abs(mapped.evaluate_batch(Z) - net.evaluate_batch(Z @ P.T)).max()))
    avg = networks.average_ensemble([net, net], [0.5, 0.5])
    err = max(err, float(np.abs(avg.evaluate_batch(Z) - net.evaluate_batch(Z)).max()))
    if err > 1e-9:
        raise AssertionError(f"structural equivalence error {err:.2e}")
    return {"detail": f"max equivalence error {err:.2e}"}


def _check_gradient(seed: int) -> dict:
    rng = np.random.default_rng(seed + 13)
    params = training.Depth2Params.init(5, 6, rng)
    X = rng.normal(size=(16, 5))
    y = rng.normal(size=16)
    _, g = training.loss_and_gradients(params, X, y, "sigmoid")
    flat_g = np.concatenate([g.W.ravel(), g.b, g.v, [g.b0]])
    h = 1e-5

    def loss_at() -> float:
        val, _ = training.loss_and_gradients(params, X, y, "sigmoid")
        return val

    num = []
    for arr in (params.W, params.b, params.v):
        flat = arr.ravel()
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lp = loss_at()
            flat[i] = old - h
            lm = loss_at()
            flat[i] = old
            num.append((lp - lm) / (2 * h))
    old = params.b0
    params.b0 = old + h
    lp = loss_at()
    params.b0 = old - h
    lm = loss_at()
    params.b0 = old
    num.append((lp - lm) / (2 * h))
    num_g = np.asarray(num)
    rel = float(np.linalg.norm(flat_g - num_g) / max(np.linalg.norm(flat_g), 1e-12))
    if rel > 1e-4:
        raise AssertionError(f"gradient relative error {rel:.2e}")
    return {"detail": f"analytic vs central differences relative error {rel:.2e}"}


def _check_baseline(seed: int) -> dict:
    spec = instance.build_instance(1, seed=seed + 17)
    net = training.constant_network(4, 0.5)
    mean, se = training.estimate_population_loss(net, spec, 4000, seed=seed + 18)
    if abs(mean - 0.25) > 4 * se + 1e-12:
        raise AssertionError(f"constant-half loss {mean} not within 4 se of 0.25")
    return {"detail": f"constant-half loss {mean} (stderr {se:.2e})"}


_CHECKS = {
    "packing": _check_packing,
    "centers": _check_centers,
    "exact-net": _check_exact_net,
    "generic-net": _check_generic_net,
    "compiler-scalar": _check_compiler_scalar,
    "compiler-network": _check_compiler_network,
    "ip-preservation": _check_ip_preservation,
    "a1": _check_a1,
    "a2": _check_a2,
    "l2": _check_l2,
    "equivalences": _check_equivalences,
    "gradient": _check_gradient,
    "baseline": _check_baseline,
}

CHECK_NAMES = tuple(_CHECKS)


def verify_all(seed: int = 0, only=None, spec_override=None) -> dict:
    """Run the verification battery; returns a JSON-ready summary with one
    entry per check and an overall pass flag."""
    names = CHECK_NAMES if not only else tuple(only)
    unknown = [n for n in names if n not in _CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {unknown}; valid: {list(CHECK_NAMES)}")
    results = []
    for name in names:
        try:
            if name == "packing":
                info = _CHECKS[name](seed, spec_override)
            else:
                info = _CHECKS[name](seed)
            results.append({"name": name, "pass": True, **info})
        except Exception as exc:  # noqa: BLE001 - aggregate and report
            results.append({"name": name, "pass": False, "detail": str(exc)})
    return {"seed": seed, "pass": all(r["pass"] for r in results), "checks": results}
