"""Experiment drivers: JSON config in, versioned CSV artifacts out.

Every subcommand is deterministic given its config and seed. CSV files open
with a schema comment line `# epw-csv v1 <scenario>` so downstream tooling
can validate what it is looking at; no timestamps or environment data are
ever written.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import basis, sampling, solver, sphquad, waves

_CSV_VERSION = "epw-csv v1"

_CONFIG_KEYS = {
    "kappa",
    "L",
    "P",
    "strategy",
    "epsilon",
    "oversample",
    "seed",
    "geometry",
    "spacing",
    "target",
    "ell_max",
    "points_file",
}

# largest exact extremal system the optimizer will attempt; larger sphere
# point budgets fall back to the equal-weight spiral
_EXTREMAL_CAP = 15

_DIST_GRID = (1 / 6, 1 / 3, 1 / 2, 2 / 3, 1.0, 3 / 2, 2.0, 3.0)

_DESK_KAPPA = 6.0
_PAPER_KAPPA = 16.0


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    kappa: float
    L: int | None = None
    P: object = None
    strategy: str | None = None
    epsilon: float = 1e-14
    oversample: float = 2.0
    seed: int = 0
    geometry: str = "sphere"
    spacing: str = "equispaced"
    target: dict | None = None
    ell_max: int | None = None
    points_file: str | None = None

    def __post_init__(self) -> None:
        if self.kappa <= 0:
            raise ConfigError("kappa must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in (0, 1]")
        if self.oversample < 1.0:
            raise ConfigError("oversample must be at least 1")
        if self.strategy is not None and self.strategy not in ("a", "b", "c", "d", "e"):
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.geometry not in ("sphere", "cube", "tetra"):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if self.spacing not in ("equispaced", "chebyshev"):
            raise ConfigError(f"unknown spacing {self.spacing!r}")
        if self.L is not None and self.L < 0:
            raise ConfigError("L must be nonnegative")
        for p in self.p_list(default=[]):
            if p < 1:
                raise ConfigError("P entries must be positive")

    @classmethod
    def from_file(
        cls, path: str, seed_override: int | None = None, paper_scale: bool = False
    ) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.setdefault("kappa", _PAPER_KAPPA if paper_scale else _DESK_KAPPA)
        if seed_override is not None:
            raw["seed"] = seed_override
        return cls(**raw)

    def p_list(self, default=None) -> list[int]:
        if self.P is None:
            return list(default) if default is not None else []
        if isinstance(self.P, (int, float)):
            return [int(self.P)]
        return [int(p) for p in self.P]

    def p_scalar(self) -> int:
        values = self.p_list()
        if len(values) != 1:
            raise ConfigError("this scenario needs a single P value")
        return values[0]


def _write_csv(path: str, scenario: str, header: list[str], rows) -> str:
    def fmt(v):
        if isinstance(v, str):
            return v
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return f"{float(v):.16e}"

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {_CSV_VERSION} {scenario}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def _round_square(P: int) -> int:
    q = math.isqrt(P)
    if q * q < P:
        q += 1
    return q * q


def sphere_system(count: int) -> np.ndarray:
    """Unit direction system of exactly `count` points (count a square)."""
    side = math.isqrt(count)
    if side * side != count:
        raise ConfigError("sphere point systems require a perfect-square size")
    degree = side - 1
    if degree <= _EXTREMAL_CAP:
        return sphquad.optimize_extremal(degree)
    return sphquad.fibonacci_sphere(count)


def _loaded_points(config: ScenarioConfig) -> np.ndarray | None:
    if config.points_file is None:
        return None
    return sphquad.load_pointset(config.points_file, positivity="warn").points


def build_set(
    config: ScenarioConfig,
    P: int,
    L: int | None = None,
    boundary_points=None,
) -> solver.ApproximationSet:
    """Approximation set for one P: propagative when no strategy is given.

    `boundary_points` switches the evanescent normalization to the unit
    sup-modulus variant used on non-spherical domains.
    """
    loaded = _loaded_points(config)
    if config.strategy is None:
        count = _round_square(P)
        dirs = loaded if loaded is not None else sphere_system(count)
        return solver.ApproximationSet.propagative(dirs, config.kappa)
    if L is None:
        L = config.L
    if L is None:
        raise ConfigError("evanescent sets need the truncation parameter L")
    source = None
    if config.strategy in ("d", "e"):
        count = _round_square(P)
        source = loaded if loaded is not None else sphere_system(count)
    nodes = sampling.generate_nodes(
        config.strategy, L, P, config.kappa, seed=config.seed, extremal_source=source
    )
    if boundary_points is None:
        return sampling.build_evanescent_set(nodes, config.kappa, L)
    return sampling.build_evanescent_set(
        nodes,
        config.kappa,
        L,
        normalization="boundary-sup",
        boundary_points=boundary_points,
    )


def _sampling_rule(config: ScenarioConfig, P: int):
    S_target = math.ceil(math.sqrt(config.oversample * P)) ** 2
    return solver.boundary_rule(config.geometry, S_target, config.spacing)


def surrogate_coefficients(L: int, kappa: float, seed: int) -> np.ndarray:
    """Seeded normal draws damped by 1/max(1, l - kappa), canonical packing."""
    rng = sampling.substream(seed, "surrogate")
    draws = rng.standard_normal((L + 1) ** 2)
    for ell in range(L + 1):
        draws[ell * ell : ell * ell + 2 * ell + 1] /= max(1.0, ell - kappa)
    return draws


def fundamental_trace(source, kappa: float):
    """Point-source solution e^{i kappa |x-s|} / (4 pi |x-s|)."""
    s = np.asarray(source, dtype=float)

    def trace(x):
        d = np.linalg.norm(np.atleast_2d(x) - s[None, :], axis=1)
        return np.exp(1j * kappa * d) / (4.0 * math.pi * d)

    return trace


def _source_inside(geometry: str, point) -> bool:
    p = np.asarray(point, dtype=float)
    if geometry == "sphere":
        return float(np.linalg.norm(p)) <= 1.0
    if geometry == "cube":
        return float(np.max(np.abs(p))) <= 1.0 / math.sqrt(3.0)
    verts = sphquad.tetrahedron_vertices()
    system = np.vstack([verts.T, np.ones(4)])
    bary = np.linalg.solve(system, np.append(p, 1.0))
    return bool(np.all(bary >= -1e-12))


def _fundamental_source(config: ScenarioConfig) -> np.ndarray:
    target = config.target or {}
    if "fundamental" not in target or "source" not in target["fundamental"]:
        raise ConfigError('this scenario needs target {"fundamental": {"source": [x, y, z]}}')
    source = np.asarray(target["fundamental"]["source"], dtype=float)
    if source.shape != (3,):
        raise ConfigError("fundamental source must be a 3-vector")
    if _source_inside(config.geometry, source):
        raise ConfigError("fundamental source lies inside the closed domain")
    return source


def cmd_mode_sweep(config: ScenarioConfig, out_dir: str, all_m: bool = False) -> str:
    """Approximate each spherical mode with one shared factorization."""
    P = config.p_scalar()
    aset = build_set(config, P)
    rule = _sampling_rule(config, len(aset))
    fac = solver.factorize(aset, rule)
    ell_max = config.ell_max
    if ell_max is None:
        ell_max = int(round(5 * config.kappa))
    rows = []
    for ell in range(ell_max + 1):
        orders = range(0, ell + 1) if all_m else (0,)
        for m in orders:
            rep = fac.solve_trace(
                lambda x: basis.spherical_wave_eval(ell, m, config.kappa, x),
                config.epsilon,
            )
            rows.append((ell, m, rep.residual, rep.coeff_norm, rep.eps_rank))
    path = os.path.join(out_dir, "mode_sweep.csv")
    return _write_csv(
        path, "mode-sweep", ["ell", "m", "residual", "coeff_norm", "eps_rank"], rows
    )


def cmd_surrogate(config: ScenarioConfig, out_dir: str) -> str:
    """Reconstruction error of a seeded random truncated solution vs P/N."""
    if config.L is None:
        raise ConfigError("the surrogate scenario needs L")
    L = config.L
    N = (L + 1) ** 2
    u_hat = surrogate_coefficients(L, config.kappa, config.seed)
    u_norm = float(np.linalg.norm(u_hat))
    trace = lambda x: waves.superposition_eval(u_hat, config.kappa, x, L)
    rows = []
    for P in config.p_list(default=[N, 2 * N, 3 * N, 4 * N]):
        aset = build_set(config, P)
        rule = _sampling_rule(config, len(aset))
        rep = solver.factorize(aset, rule).solve_trace(trace, config.epsilon)
        rows.append((len(aset) / N, rep.residual, rep.coeff_norm / u_norm))
    path = os.path.join(out_dir, "surrogate.csv")
    return _write_csv(
        path, "surrogate", ["ratio", "residual", "coeff_norm_over_unorm"], rows
    )


def _evanescent_L(config: ScenarioConfig, P: int) -> int:
    if config.L is not None:
        return config.L
    # truncation grows with the set size, floored at the wavenumber
    return max(math.ceil(config.kappa), math.isqrt(P // 10))


def _two_series_systems(config: ScenarioConfig, P: int, boundary_sup: bool):
    """Factorized (propagative, evanescent) systems sharing one sampling rule.

    Neither depends on the source point, so sweeps over traces reuse them.
    """
    rule = _sampling_rule(config, _round_square(P))
    boundary_points = rule.points if boundary_sup else None

    prop = solver.ApproximationSet.propagative(
        _loaded_points(config)
        if config.points_file is not None
        else sphere_system(_round_square(P)),
        config.kappa,
    )

    L = _evanescent_L(config, _round_square(P))
    ev_config = config if config.strategy is not None else _with_strategy(config, "e")
    ev = build_set(ev_config, P, L=L, boundary_points=boundary_points)
    return solver.factorize(prop, rule), solver.factorize(ev, rule)


def _two_series_rows(config: ScenarioConfig, P: int, source, boundary_sup: bool):
    """(propagative, evanescent) reports for one P and one source point."""
    trace = fundamental_trace(source, config.kappa)
    sys_p, sys_e = _two_series_systems(config, P, boundary_sup)
    rep_p = sys_p.solve_trace(trace, config.epsilon)
    rep_e = sys_e.solve_trace(trace, config.epsilon)
    return rep_p, rep_e


def _with_strategy(config: ScenarioConfig, strategy: str) -> ScenarioConfig:
    return ScenarioConfig(
        kappa=config.kappa,
        L=config.L,
        P=config.P,
        strategy=strategy,
        epsilon=config.epsilon,
        oversample=config.oversample,
        seed=config.seed,
        geometry=config.geometry,
        spacing=config.spacing,
        target=config.target,
        ell_max=config.ell_max,
        points_file=config.points_file,
    )


def cmd_fundamental(config: ScenarioConfig, out_dir: str) -> str:
    """Point-source approximation: distance sweep (scalar P) or P sweep (list)."""
    if config.geometry != "sphere":
        raise ConfigError("the fundamental scenario runs on the sphere")
    source = _fundamental_source(config)
    lam = 2.0 * math.pi / config.kappa
    p_values = config.p_list()
    if not p_values:
        raise ConfigError("the fundamental scenario needs P")
    rows = []
    if len(p_values) == 1:
        # distance sweep along the configured source direction; the systems
        # are distance independent, so factorize the pair once
        direction = source / np.linalg.norm(source)
        sys_p, sys_e = _two_series_systems(config, p_values[0], False)
        for dist in _DIST_GRID:
            trace = fundamental_trace((1.0 + dist * lam) * direction, config.kappa)
            rep_p = sys_p.solve_trace(trace, config.epsilon)
            rep_e = sys_e.solve_trace(trace, config.epsilon)
            rows.append(("propagative", dist, rep_p.residual, rep_p.coeff_norm))
            rows.append(("evanescent", dist, rep_e.residual, rep_e.coeff_norm))
        path = os.path.join(out_dir, "fundamental_distance.csv")
        return _write_csv(
            path,
            "fundamental-distance",
            ["series", "dist_over_lambda", "residual", "coeff_norm"],
            rows,
        )
    for P in p_values:
        rep_p, rep_e = _two_series_rows(config, P, source, False)
        actual = _round_square(P)
        rows.append(("propagative", actual, rep_p.residual, rep_p.coeff_norm))
        rows.append(("evanescent", actual, rep_e.residual, rep_e.coeff_norm))
    path = os.path.join(out_dir, "fundamental_psweep.csv")
    return _write_csv(
        path,
        "fundamental-psweep",
        ["series", "P", "residual", "coeff_norm"],
        rows,
    )


def cmd_geometry(config: ScenarioConfig, out_dir: str) -> str:
    """Fundamental-solution P sweep on a polyhedron with sup normalization."""
    if config.geometry not in ("cube", "tetra"):
        raise ConfigError("the geometry scenario needs geometry cube or tetra")
    source = _fundamental_source(config)
    p_values = config.p_list()
    if not p_values:
        raise ConfigError("the geometry scenario needs P")
    rows = []
    for P in p_values:
        rep_p, rep_e = _two_series_rows(config, P, source, True)
        actual = _round_square(P)
        rows.append(("propagative", actual, rep_p.residual, rep_p.coeff_norm))
        rows.append(("evanescent", actual, rep_e.residual, rep_e.coeff_norm))
    path = os.path.join(out_dir, f"geometry_{config.geometry}.csv")
    return _write_csv(
        path, "geometry", ["series", "P", "residual", "coeff_norm"], rows
    )


def cmd_singular_values(config: ScenarioConfig, out_dir: str) -> str:
    """Sorted spectrum of the sampling matrix for each P in the list."""
    rows = []
    for P in config.p_list():
        aset = build_set(config, P)
        rule = _sampling_rule(config, len(aset))
        for idx, sigma in enumerate(solver.singular_values(aset, rule), start=1):
            rows.append((len(aset), idx, sigma))
    path = os.path.join(out_dir, "singular_values.csv")
    return _write_csv(path, "spectrum", ["P", "index", "sigma"], rows)


def cmd_extremal(config: ScenarioConfig, out_dir: str) -> str:
    """Generate an extremal system, validate it, write the point-set format."""
    if config.L is None:
        raise ConfigError("extremal generation needs L")
    L = config.L
    if L > _EXTREMAL_CAP:
        raise ConfigError(
            f"built-in extremal systems stop at degree {_EXTREMAL_CAP}; "
            "precompute larger ones and validate with validate-points"
        )
    points = sphquad.optimize_extremal(L)
    weights = sphquad.cubature_weights(L, points, positivity="raise")
    residual = sphquad.exactness_residual(points, weights, L)
    if residual > 1e-9:
        raise ArithmeticError(f"exactness residual {residual:.3e} too large")
    path = os.path.join(out_dir, f"extremal_L{L}.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# spherical point system, degree {L}, columns x y z w\n")
        for (x, y, z), w in zip(points, weights):
            fh.write(f"{x:.16e} {y:.16e} {z:.16e} {w:.16e}\n")
    return path


def cmd_validate_points(config: ScenarioConfig) -> int:
    if config.points_file is None:
        raise ConfigError("validate-points needs points_file")
    try:
        rule = sphquad.load_pointset(config.points_file, positivity="warn")
    except ValueError as exc:
        print(f"validation FAILED: {exc}", file=sys.stderr)
        return 1
    residual = sphquad.exactness_residual(rule.points, rule.weights, rule.degree)
    print(f"points: {len(rule)}")
    print(f"degree: {rule.degree}")
    print(f"weight sum: {float(np.sum(rule.weights)):.16e}")
    print(f"min weight: {float(np.min(rule.weights)):.16e}")
    print(f"exactness residual: {residual:.3e}")
    if residual > 1e-9 or np.any(rule.weights <= 0):
        print("validation FAILED", file=sys.stderr)
        return 1
    print("validation passed")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="epw",
        description="Evanescent plane-wave approximation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    names = (
        "mode-sweep",
        "surrogate",
        "fundamental",
        "geometry",
        "singular-values",
        "extremal",
        "validate-points",
    )
    for name in names:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=".")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--paper-scale", action="store_true")
        if name == "mode-sweep":
            sp.add_argument("--all-m", action="store_true")
    args = parser.parse_args(argv)
    try:
        config = ScenarioConfig.from_file(
            args.config, seed_override=args.seed, paper_scale=args.paper_scale
        )
        os.makedirs(args.out, exist_ok=True)
        if args.command == "mode-sweep":
            path = cmd_mode_sweep(config, args.out, all_m=args.all_m)
        elif args.command == "surrogate":
            path = cmd_surrogate(config, args.out)
        elif args.command == "fundamental":
            path = cmd_fundamental(config, args.out)
        elif args.command == "geometry":
            path = cmd_geometry(config, args.out)
        elif args.command == "singular-values":
            path = cmd_singular_values(config, args.out)
        elif args.command == "extremal":
            path = cmd_extremal(config, args.out)
        else:
            return cmd_validate_points(config)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, sphquad.FundamentalSystemError, sphquad.PositivityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
