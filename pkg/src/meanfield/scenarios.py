"""Scenario presets and the pipeline that runs them.

Each preset is a configuration tree (see :mod:`meanfield.config`) plus a
runner.  A run writes its artifacts into an output directory, then a
``manifest.json`` listing every file with its SHA-256, the resolved
configuration, summary numbers and the outcome of each declared assertion.
Nothing time- or host-dependent is written, so reruns are byte-identical.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import io, svg
from .bifurcation import ERF_SLOPE_SCALE, model_coupling, pitchfork_sweep, turing_hopf_curve, turing_hopf_sweep
from .config import apply_overrides, build_network, build_params, check_sections, load_config, merge
from .errors import ConfigError, MeanFieldError
from .model import sigmoid_deriv
from .moments import solve_moments
from .network import NetworkConfig, TrajectoryBundle, simulate_network, simulate_replicas
from .stationary import classify_local_phase, potential_phi, shoot_stationary_variance
from .stats import chi2_independence, ks_gaussian, regime_classify

R = ERF_SLOPE_SCALE
TRACE_NEURONS = 30


class UnknownScenario(MeanFieldError, LookupError):
    pass


@dataclass
class RunContext:
    """Mutable state of one run: resolved tree, output directory and collected results."""

    tree: dict
    out: Path
    touched: frozenset[str] = frozenset()
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.tree.get("seed", 0))

    @property
    def model_overridden(self) -> bool:
        return any(k.startswith("model.") for k in self.touched)

    def setting(self, key: str) -> Any:
        an = self.tree.get("analysis", {})
        if key not in an:
            raise ConfigError("required", "analysis." + key)
        return an[key]

    def path(self, name: str) -> Path:
        if name in self.files:
            raise ValueError(f"{name} written twice")
        self.files.append(name)
        return self.out / name

    def check(self, name: str, ok: bool) -> None:
        self.assertions[name] = bool(ok)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    figure: str
    defaults: dict
    runner: Callable[[RunContext], None]
    paper_scale: dict = field(default_factory=dict)


def _label_record(tag: dict, lab) -> dict:
    rec = dict(tag)
    rec.update(label=lab.label.value, amplitude=lab.amplitude, peak_frequency=lab.peak_frequency,
               peak_ratio=lab.peak_ratio, swing=lab.swing, dispersion=lab.dispersion,
               neuron_range=lab.neuron_range)
    return rec


def export_bundle(path: Path, bundle: TrajectoryBundle, per_population: int | None = None) -> None:
    """One row per recorded time, one column per neuron; headers ``p<a>_n<i>``."""
    cols, header = [bundle.times], ["t"]
    for a in range(bundle.config.params.M):
        block = bundle.population(a)
        keep = block.shape[1] if per_population is None else min(per_population, block.shape[1])
        header += [f"p{a + 1}_n{i}" for i in range(keep)]
        cols += [block[:, i] for i in range(keep)]
    io.write_csv(path, header, cols)


def _mean_paths(bundle: TrajectoryBundle) -> np.ndarray:
    return np.stack([bundle.population(a).mean(axis=1) for a in range(bundle.config.params.M)], axis=1)


def _trace_outputs(ctx: RunContext, stem: str, bundle: TrajectoryBundle, title: str) -> None:
    export_bundle(ctx.path(f"{stem}_traces.csv"), bundle, TRACE_NEURONS)
    M = bundle.config.params.M
    series = [(bundle.times, bundle.population(a)[:, :TRACE_NEURONS], f"population {a + 1}") for a in range(M)]
    m = _mean_paths(bundle)
    series += [(bundle.times, m[:, a], "") for a in range(M)]
    svg.line_plot(ctx.path(f"{stem}_traces.svg"), series, title=title, xlabel="t", ylabel="x")


# ---------------------------------------------------------------- runners


def _run_statistics(ctx: RunContext) -> None:
    params = build_params(ctx.tree)
    net = build_network(ctx.tree, params, ctx.seed)
    alpha = float(ctx.setting("alpha"))
    T = net.horizon
    store = "full" if np.any(params.sigma > 0) else "diagonal"
    sol = solve_moments(params, T, net.dt, store=store)
    sol.to_csv(ctx.path("moments.csv"))
    bundle = simulate_network(net)
    k = bundle.time_index(T)
    records, edges_all, dens_all, overlays = [], [], [], []
    gauss_cols, gauss_header = [], []
    hist_cols = [[], [], [], []]
    bins = int(ctx.setting("bins"))
    for a in range(params.M):
        x = bundle.population(a)[k]
        mu, v = float(sol.mean_at(T)[a]), float(sol.var_at(T)[a])
        rep = ks_gaussian(x, mu, v, alpha=alpha)
        records.append({"name": f"ks_pop{a + 1}", **rep.to_json()})
        ctx.check(f"ks_pop{a + 1}", rep.verdict)
        dens, edges = np.histogram(x, bins=bins, density=True)
        hist_cols[0].append(np.full(bins, a + 1.0))
        hist_cols[1].append(edges[:-1])
        hist_cols[2].append(edges[1:])
        hist_cols[3].append(dens)
        sd = math.sqrt(v)
        grid = np.linspace(mu - 4 * sd, mu + 4 * sd, 201)
        pdf = np.exp(-0.5 * ((grid - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        gauss_header += [f"x_{a + 1}", f"pdf_{a + 1}"]
        gauss_cols += [grid, pdf]
        edges_all.append(edges)
        dens_all.append(dens)
        overlays.append((grid, pdf))
    io.write_csv(ctx.path("histogram.csv"), ["population", "bin_left", "bin_right", "density"],
                 [np.concatenate(c) for c in hist_cols])
    io.write_csv(ctx.path("gaussian.csv"), gauss_header, gauss_cols)
    svg.histogram(ctx.path("histogram.svg"), edges_all, dens_all, overlays=overlays,
                  labels=[f"population {a + 1}" for a in range(params.M)], title=f"marginals at t={T:g}", xlabel="x")

    # empirical mean against mu(t) +- 3 sqrt(C/N) on the recorded grid
    keep = bundle.times >= 0
    t = bundle.times[keep]
    emp = _mean_paths(bundle)[keep]
    idx = [sol.index(float(s)) for s in t]
    mu_t, var_t = sol.mean[idx], sol.var[idx]
    band = 3 * np.sqrt(var_t / np.array(net.n_per_pop, dtype=float))
    inside = np.abs(emp - mu_t) <= band
    cols = [t]
    header = ["t"]
    for a in range(params.M):
        header += [f"empirical_{a + 1}", f"mu_{a + 1}", f"band_{a + 1}"]
        cols += [emp[:, a], mu_t[:, a], band[:, a]]
    io.write_csv(ctx.path("mean_agreement.csv"), header, cols)
    ctx.summary["mean_band_fraction"] = [float(f) for f in inside.mean(axis=0)]

    if params.M >= 2:
        rn = int(ctx.setting("replica_n"))
        reps = int(ctx.setting("replicas"))
        rcfg = NetworkConfig(params, (rn,) * params.M, net.dt, T)
        seeds = [ctx.seed * 1_000_003 + 1 + s for s in range(reps)]
        X = simulate_replicas(rcfg, seeds, T)
        rep = chi2_independence(X[:, 0], X[:, rn], bins=int(ctx.setting("chi2_bins")), alpha=alpha)
        records.append({"name": "chi2_pop1_pop2", **rep.to_json()})
        ctx.check("chi2_independence", rep.verdict)
    io.write_jsonl(ctx.path("reports.jsonl"), records)
    ctx.summary["p_values"] = {r["name"]: r["p_value"] for r in records}


def _run_one_population(ctx: RunContext) -> None:
    base = build_params(ctx.tree)
    if base.M != 1:
        raise ConfigError("this preset has one population", "model.theta")
    points = [tuple(float(v) for v in p) for p in ctx.setting("points")]
    if "model.jbar" in ctx.touched:
        points = [(float(base.jbar[0, 0]), s) for _, s in points]
    if "model.sigma" in ctx.touched:
        points = [(J, float(base.sigma[0, 0])) for J, _ in points]
    window = tuple(ctx.setting("window"))
    expect = {} if ctx.model_overridden else dict(ctx.setting("expect"))
    spec = base.sigmoids[0][0]
    s0 = float(sigmoid_deriv(spec, 0.0))
    # pitchfork locus in the unit-slope convention, mapped to model couplings
    gammas = [float(v) for v in ctx.setting("gammas")]
    curve = pitchfork_sweep(spec.gain, gammas).as_array()
    io.write_csv(ctx.path("pitchfork.csv"), ["Gamma", "J_star", "jbar_star"],
                 [curve[:, 0], curve[:, 1], model_coupling(1.0) * curve[:, 1]])
    records = []
    for k, (J, s) in enumerate(points):
        tag = chr(ord("a") + k)
        p = base.replace(jbar=J, sigma=s)
        bundle = simulate_network(build_network(ctx.tree, p, ctx.seed))
        lab = regime_classify(bundle, 0, window)
        records.append(_label_record({"point": tag, "jbar": J, "sigma": s,
                                      "scs_product": s * s0 * float(p.theta[0])}, lab))
        _trace_outputs(ctx, f"point_{tag}", bundle, f"({tag}) J={J:g} sigma={s:g}")
        if tag in expect:
            ctx.check(f"point_{tag}_{expect[tag]}", lab.label.value == expect[tag])
    io.write_jsonl(ctx.path("labels.jsonl"), records)
    ctx.summary["labels"] = {r["point"]: r["label"] for r in records}


def _run_delay(ctx: RunContext) -> None:
    base = build_params(ctx.tree)
    if base.M != 1:
        raise ConfigError("this preset has one population", "model.theta")
    spec = base.sigmoids[0][0]
    if spec.family != "centered-erf":
        raise ConfigError("the delay preset needs the centered-erf family", "model.family")
    J_formula = float(base.jbar[0, 0]) / R
    lams = np.linspace(*[float(v) for v in ctx.setting("lambda_range")], int(ctx.setting("lambda_points")))
    curve = turing_hopf_sweep(J_formula, spec.gain, lams)
    curve.to_csv(ctx.path("turing_hopf.csv"))
    arr = curve.as_array()
    if arr.size:
        svg.line_plot(ctx.path("turing_hopf.svg"), [(arr[:, 0], arr[:, 1], "tau_c")],
                      title="Turing-Hopf curve", xlabel="lambda", ylabel="tau_c")
    lam = float(base.lam[0])
    crit = turing_hopf_curve(J_formula, spec.gain, 0.5 * lam * lam)
    ctx.summary["tau_c"] = None if crit is None else crit[0]
    ctx.summary["omega_c"] = None if crit is None else crit[1]
    cases = [tuple(float(v) for v in c) for c in ctx.setting("cases")]
    if "model.tau" in ctx.touched:
        cases = [(float(base.tau[0, 0]), s) for _, s in cases]
    if "model.sigma" in ctx.touched:
        cases = [(t, float(base.sigma[0, 0])) for t, _ in cases]
    expect = [] if ctx.model_overridden else list(ctx.setting("expect"))
    window = tuple(ctx.setting("window"))
    records = []
    for k, (tau, s) in enumerate(cases):
        p = base.replace(tau=tau, sigma=s)
        bundle = simulate_network(build_network(ctx.tree, p, ctx.seed))
        lab = regime_classify(bundle, 0, window)
        records.append(_label_record({"case": k + 1, "tau": tau, "sigma": s}, lab))
        _trace_outputs(ctx, f"case_{k + 1}", bundle, f"tau={tau:g} sigma={s:g}")
        if k < len(expect):
            ctx.check(f"case_{k + 1}_{expect[k]}", lab.label.value == expect[k])
    io.write_jsonl(ctx.path("labels.jsonl"), records)
    ctx.summary["labels"] = [r["label"] for r in records]


def _potential_outputs(ctx: RunContext, params, stem: str) -> None:
    """Stationary variance and potential at zero mean for every population with disorder."""
    zero = np.zeros(params.M)
    cols, header, series = [], [], []
    for a in range(params.M):
        if params.sigma[a, a] == 0:
            continue
        res = shoot_stationary_variance(params, zero, population=a)
        ctx.summary.setdefault("stationary_c0", {})[f"{stem}_pop{a + 1}"] = res.c0
        if res.c0 == 0:
            continue
        # |C| <= c0 by Cauchy-Schwarz, so the potential lives on [0, c0]
        grid = np.linspace(0.0, res.c0, 201)
        pot = potential_phi(params, zero, res.c0, grid, population=a)
        header += [f"C_{a + 1}", f"phi_{a + 1}"]
        cols += [grid, pot.phi]
        series.append((grid, pot.phi, f"population {a + 1}"))
    if cols:
        io.write_csv(ctx.path(f"{stem}_potential.csv"), header, cols)
        svg.line_plot(ctx.path(f"{stem}_potential.svg"), series, title="potential at zero mean", xlabel="C",
                      ylabel="phi")


def _run_localized(ctx: RunContext) -> None:
    base = build_params(ctx.tree)
    if base.M != 2:
        raise ConfigError("this preset has two populations", "model.theta")
    if "model.sigma" in ctx.touched or "sigma1" not in ctx.tree.get("analysis", {}):
        cases = [base.sigma]
    else:
        cases = []
        for s1 in ctx.setting("sigma1"):
            m = base.sigma.copy()
            m[0, 0] = float(s1)
            cases.append(m)
    expect = [] if ctx.model_overridden else [tuple(e) for e in ctx.setting("expect")]
    window = tuple(ctx.setting("window"))
    phase_check = bool(ctx.tree.get("analysis", {}).get("phase_check", False))
    with_potential = bool(ctx.tree.get("analysis", {}).get("potential", False))
    records = []
    for k, sig in enumerate(cases):
        p = base.replace(sigma=sig)
        stem = f"case_{k + 1}"
        bundle = simulate_network(build_network(ctx.tree, p, ctx.seed))
        labels = []
        for a in range(2):
            lab = regime_classify(bundle, a, window)
            s0 = float(sigmoid_deriv(p.sigmoids[a][a], 0.0))
            local = classify_local_phase(float(sig[a, a]), s0, float(p.theta[a]))
            labels.append(lab.label.value)
            rec = _label_record({"case": k + 1, "population": a + 1, "sigma_aa": float(sig[a, a])}, lab)
            rec.update(local_phase=local.value, final_mean=float(bundle.population(a)[-1].mean()))
            records.append(rec)
            if phase_check and not ctx.model_overridden:
                ctx.check(f"{stem}_pop{a + 1}_matches_local_phase", lab.label.value == local.value)
        if k < len(expect):
            ctx.check(f"{stem}_labels_{'_'.join(expect[k])}", tuple(labels) == expect[k])
        _trace_outputs(ctx, stem, bundle, " / ".join(labels))
        if with_potential and p.diagonal_disorder():
            _potential_outputs(ctx, p, stem)
    io.write_jsonl(ctx.path("labels.jsonl"), records)
    ctx.summary["labels"] = [[r["label"] for r in records if r["case"] == k + 1] for k in range(len(cases))]


def _run_heterogeneity(ctx: RunContext) -> None:
    base = build_params(ctx.tree)
    sigmas = [float(s) for s in ctx.setting("sigmas")]
    if "model.sigma" in ctx.touched:
        sigmas = [None]
    expect = [] if ctx.model_overridden else list(ctx.setting("expect"))
    n_seeds = int(ctx.setting("seeds"))
    need = int(ctx.setting("min_agree"))
    window = tuple(ctx.setting("window"))
    records = []
    for k, s in enumerate(sigmas):
        p = base if s is None else base.replace(sigma=s)
        agree = 0
        for j in range(n_seeds):
            seed = ctx.seed + j
            bundle = simulate_network(build_network(ctx.tree, p, seed))
            labs = [regime_classify(bundle, a, window) for a in range(p.M)]
            for a, lab in enumerate(labs):
                records.append(_label_record({"sigma": float(p.sigma.max()), "seed": seed, "population": a + 1}, lab))
            if k < len(expect) and all(lab.label.value == expect[k] for lab in labs):
                agree += 1
            if j == 0:
                _trace_outputs(ctx, f"sigma_{k + 1}", bundle, f"sigma={float(p.sigma.max()):g}")
        if k < len(expect):
            ctx.summary.setdefault("agreeing_seeds", {})[f"{s:g}"] = agree
            ctx.check(f"sigma_{s:g}_{expect[k]}", agree >= need)
    io.write_jsonl(ctx.path("labels.jsonl"), records)


# ---------------------------------------------------------------- presets

_WC_MODEL = {
    "theta": [1.0, 1.0],
    "lam": 0.5,
    "jbar": [[15.0, -12.0], [16.0, -5.0]],
    "sigma": 1.0,
    "tau": 0.0,
    "family": "gaussian-cdf",
    "gain": 3.0,
    "init": {"kind": "gaussian", "mean": [0.0, 0.0], "var": [0.5, 0.5]},
}


def _localized_model(J: float, s1: float, s2: float) -> dict:
    return {
        "theta": [1.0, 1.0],
        "lam": 0.0,
        "jbar": [[0.0, J * R], [J * R, 0.0]],
        "sigma": [[s1 * R, 0.0], [0.0, s2 * R]],
        "tau": 0.0,
        "family": "centered-erf",
        "gain": 1.0,
        "init": {"kind": "gaussian", "mean": [0.0, 0.0], "var": [1.0, 1.0]},
    }


SCENARIOS: dict[str, Scenario] = {}


def _register(sc: Scenario) -> None:
    if sc.name in SCENARIOS:
        raise ValueError(f"duplicate scenario {sc.name}")
    SCENARIOS[sc.name] = sc


_register(Scenario(
    "fig-statistics",
    "Gaussian marginals and cross-population independence in the excitatory-inhibitory network",
    "histograms of two-population marginals against the limit Gaussians",
    {
        "seed": 1,
        "model": _WC_MODEL,
        "network": {"n_per_pop": 2000, "dt": 0.005, "horizon": 2.0, "record_stride": 20},
        "analysis": {"alpha": 0.01, "bins": 40, "chi2_bins": 5, "replicas": 500, "replica_n": 100},
    },
    _run_statistics,
    {"network.n_per_pop": 6000, "analysis.replica_n": 2000},
))

_register(Scenario(
    "fig-one-population",
    "One population with non-centered couplings: stationary and chaotic states at points a-e",
    "one-population bifurcation diagram (pitchfork and SCS) with traces at points a-e",
    {
        "seed": 1,
        "model": {"theta": 1.0, "lam": 0.0, "jbar": 0.5, "sigma": 0.5, "tau": 0.0, "family": "centered-erf",
                  "gain": R, "init": {"kind": "gaussian", "mean": [0.1], "var": [1.0]}},
        "network": {"n_per_pop": 2000, "dt": 0.02, "horizon": 50.0, "record_stride": 5},
        "analysis": {"points": [[0.5, 0.5], [0.5, 1.5], [1.5, 1.5], [1.5, 1.7], [1.5, 2.0]],
                     "expect": {"a": "stationary", "b": "chaotic"},
                     "gammas": [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0], "window": [20.0, 50.0]},
    },
    _run_one_population,
    {"network.n_per_pop": 6000},
))

_register(Scenario(
    "fig-delay-oscillations",
    "Delayed inhibitory population: Turing-Hopf curve and three simulated regimes",
    "Turing-Hopf curve in (lambda, tau) with simulations at (tau, sigma) = (0.1, 0.5), (0.5, 0.5), (0.5, 1)",
    {
        "seed": 1,
        "model": {"theta": 1.0, "lam": 0.5, "jbar": model_coupling(-2.0), "sigma": 0.5, "tau": 0.1,
                  "family": "centered-erf", "gain": 3.0, "init": {"kind": "gaussian", "mean": [0.1], "var": [0.125]}},
        "network": {"n_per_pop": 2000, "dt": 0.01, "horizon": 50.0, "record_stride": 5},
        "analysis": {"lambda_range": [0.0, 3.0], "lambda_points": 61,
                     "cases": [[0.1, 0.5], [0.5, 0.5], [0.5, 1.0]],
                     "expect": ["stationary", "oscillatory", "chaotic"], "window": [20.0, 50.0]},
    },
    _run_delay,
    {"network.n_per_pop": 6000},
))

_register(Scenario(
    "fig-localized-chaos",
    "Two populations with diagonal disorder (sigma1=3, sigma2=0.5, J12=J21=3): chaos stays in population 1",
    "double-well potential and traces of the two-population localized chaos",
    {
        "seed": 1,
        "model": _localized_model(3.0, 3.0, 0.5),
        "network": {"n_per_pop": 2000, "dt": 0.02, "horizon": 40.0, "record_stride": 5},
        "analysis": {"expect": [["chaotic", "stationary"]], "window": [20.0, 40.0], "phase_check": True,
                     "potential": True},
    },
    _run_localized,
))

_register(Scenario(
    "fig-localized-chaos-nonzero",
    "Localized chaos around non-zero fixed points (J12=J21=4, sigma2=0.5, sigma1 in {2, 5})",
    "two-population traces around non-zero fixed points for sigma1 = 2 and 5",
    {
        "seed": 1,
        "model": _localized_model(4.0, 2.0, 0.5),
        "network": {"n_per_pop": 2000, "dt": 0.02, "horizon": 40.0, "record_stride": 5},
        "analysis": {"sigma1": [2.0 * R, 5.0 * R], "expect": [["stationary", "stationary"], ["chaotic", "stationary"]],
                     "window": [20.0, 40.0]},
    },
    _run_localized,
))

_register(Scenario(
    "fig-heterogeneity-oscillations",
    "Excitatory-inhibitory network, sigma sweep 0.9/1.6/3.5: stationary, oscillatory, chaotic",
    "heterogeneity-induced oscillations, traces for increasing sigma",
    {
        "seed": 1,
        "model": _WC_MODEL,
        "network": {"n_per_pop": 2000, "dt": 0.02, "horizon": 30.0, "record_stride": 5},
        "analysis": {"sigmas": [0.9, 1.6, 3.5], "expect": ["stationary", "oscillatory", "chaotic"],
                     "seeds": 5, "min_agree": 4, "window": [10.0, 30.0]},
    },
    _run_heterogeneity,
))


def list_scenarios() -> list[tuple[str, str, str]]:
    return [(s.name, s.description, s.figure) for s in SCENARIOS.values()]


def resolve(name_or_path: str) -> tuple[Scenario, dict]:
    """Preset and its configuration tree, from a preset name or a YAML file."""
    if name_or_path in SCENARIOS:
        sc = SCENARIOS[name_or_path]
        return sc, copy.deepcopy(sc.defaults)
    p = Path(name_or_path)
    if p.suffix in (".yaml", ".yml") or p.is_file():
        if not p.is_file():
            raise UnknownScenario(f"no scenario or config file {name_or_path!r}")
        tree = load_config(p)
        check_sections(tree)
        name = tree.get("scenario")
        if name not in SCENARIOS:
            raise UnknownScenario(f"config names unknown scenario {name!r}")
        sc = SCENARIOS[name]
        return sc, merge(sc.defaults, {k: v for k, v in tree.items() if k != "scenario"})
    raise UnknownScenario(f"unknown scenario {name_or_path!r}; see 'list'")


def run_scenario(name_or_path: str, out: str | Path, *, seed: int | None = None, overrides=(),
                 paper_scale: bool = False) -> tuple[int, dict]:
    """Run a preset; returns ``(exit status, manifest)``.

    Status 0 when every declared assertion holds, 1 otherwise.  Unknown
    scenarios, configuration and numerical failures raise.
    """
    sc, tree = resolve(name_or_path)
    if paper_scale:
        tree, _ = apply_overrides(tree, [f"{k}={v}" for k, v in sc.paper_scale.items()])
    tree, touched = apply_overrides(tree, overrides)
    if seed is not None:
        tree["seed"] = int(seed)
    check_sections(tree)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(tree, out, touched)
    sc.runner(ctx)
    for name in ctx.files:
        if not (out / name).is_file():
            raise RuntimeError(f"declared output {name} was not written")
    passed = all(ctx.assertions.values())
    manifest = {
        "scenario": sc.name,
        "seed": ctx.seed,
        "paper_scale": paper_scale,
        "overrides": sorted(touched),
        "config": _plain(tree),
        "files": [{"path": n, "sha256": io.sha256(out / n), "bytes": (out / n).stat().st_size} for n in ctx.files],
        "summary": _plain(ctx.summary),
        "assertions": ctx.assertions,
        "passed": passed,
    }
    io.write_json(out / "manifest.json", manifest)
    return (0 if passed else 1), manifest


def _plain(obj):
    """JSON-ready copy: numpy scalars and arrays become Python numbers and lists."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
