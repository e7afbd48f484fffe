"""Command-line entry point: one experiment kind per invocation.

Exit codes: 0 success, 1 scientific-check or numeric failure,
2 configuration/usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings
from pathlib import Path

import numpy as np

from ..core.covariance import validate_hypothesis
from ..errors import ConfigurationError, ResolutionError, SizeError, SpeckleError
from ..gaussianity import (
    exponential_law_test,
    gaussianity_gap,
    moment_estimate,
    scintillation_index,
    self_average,
)
from ..moments import (
    MomentQuery,
    m11_limit_diffusive,
    m11_limit_kinetic,
    mean_field,
    second_moment,
    solve_I2,
)
from ..momentpde import (
    bound_check_linear,
    bound_check_quadratic,
    evolve_full,
    evolve_gaussian_N,
    separable_measure,
)
from ..propagate import EnsembleStats, run_ensemble
from .config import RunConfig
from .runio import ManifestWriter, read_array, read_manifest


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        kind = cfg.experiment_kind
        if kind is not None and kind != args.command:
            raise ConfigurationError(
                f"config declares experiment.kind={kind!r} but the "
                f"{args.command!r} command was invoked"
            )
        cfg.require_sections(args.command)
        return args.func(cfg, args)
    except ResolutionError as exc:
        # an evaluator refusing an unresolvable query is a scientific failure
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except (ConfigurationError, SizeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SpeckleError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specklesim",
        description="Monte Carlo simulation and moment verification for "
                    "paraxial waves in random media",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "check-covariance": cmd_check_covariance,
        "simulate": cmd_simulate,
        "moments": cmd_moments,
        "verify": cmd_verify,
        "moment-pde": cmd_moment_pde,
    }
    for name, func in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run-configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override ensemble.seed")
        p.add_argument("--workers", type=int, default=1, help="parallel worker count")
        p.add_argument("--strict", action="store_true",
                       help="promote warnings (boundary energy, leaked TV) to failures")
        p.set_defaults(func=func)
    return parser


def cmd_check_covariance(cfg: RunConfig, args) -> int:
    model = cfg.build_model()
    scaling = cfg.build_scaling()
    report = validate_hypothesis(model, scaling)
    writer = ManifestWriter(args.out, cfg.data)
    writer.csv(
        "covariance_report.csv",
        ["check", "passed", "hard", "value", "detail"],
        [[r["check"], int(r["passed"]), int(r["hard"]), r["value"], r["detail"]]
         for r in report.to_records()],
    )
    text_path = Path(args.out) / "covariance_report.txt"
    text_path.write_text(report.to_text() + "\n", encoding="utf-8")
    writer.add(text_path)
    writer.finalize()
    print(report.to_text())
    return 0 if report.passed else 1


def cmd_simulate(cfg: RunConfig, args) -> int:
    spec = cfg.build_ensemble_spec(seed_override=args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        stats = run_ensemble(spec, workers=args.workers)
    writer = ManifestWriter(args.out, cfg.data, seed=spec.seed)
    geometry = {"grid": {"d": spec.grid.d, "n": spec.grid.n, "L": spec.grid.L},
                "probes": [list(p) for p in spec.probes]}
    writer.array("field_samples", stats.field_samples,
                 axes=["realization", "probe"], units="field amplitude",
                 extra_meta=geometry)
    writer.array("intensity_samples",
                 np.abs(stats.field_samples) ** 2,
                 axes=["realization", "probe"], units="intensity",
                 extra_meta=geometry)
    writer.array("norms", stats.norms, axes=["realization"], units="energy")
    writer.array("boundary_fractions", stats.boundary_fractions,
                 axes=["realization"], units="fraction")
    if stats.intensity_fields is not None:
        writer.array("intensity_fields", stats.intensity_fields,
                     axes=["realization"] + [f"x{i}" for i in range(spec.grid.d)],
                     units="intensity", extra_meta=geometry)
    writer.csv(
        "diagnostics.csv",
        ["realization", "z", "norm", "boundary_energy"],
        [[i, spec.z_final, stats.norms[i], stats.boundary_fractions[i]]
         for i in range(stats.n)],
    )
    rows = []
    scints = scintillation_index(stats, range(len(spec.probes)))
    for col, probe in enumerate(spec.probes):
        coord = spec.grid.index_to_point(probe)
        m10 = moment_estimate(stats, (col,), ())
        m11 = moment_estimate(stats, (col,), (col,))
        m22 = moment_estimate(stats, (col, col), (col, col))
        rows.append([
            col, " ".join(f"{c:.9g}" for c in coord), stats.n,
            m10.value.real, m10.value.imag, m10.se,
            m11.value.real, m11.se, m22.value.real, m22.se,
            scints[col].value, scints[col].se,
        ])
    writer.csv(
        "probe_moments.csv",
        ["probe", "coords", "n", "mean_re", "mean_im", "mean_se",
         "intensity", "intensity_se", "intensity2", "intensity2_se",
         "scint", "scint_se"],
        rows,
    )
    writer.finalize()
    if stats.boundary_flag:
        msg = (f"boundary energy fraction {stats.max_boundary_fraction:.3e} exceeds "
               f"1e-6: periodic wrap-around may bias localized-beam statistics")
        if args.strict:
            print(f"check failed: {msg}", file=sys.stderr)
            return 1
        print(f"warning: {msg}", file=sys.stderr)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return 0


def cmd_moments(cfg: RunConfig, args) -> int:
    model = cfg.build_model()
    scaling = cfg.build_scaling()
    beam = cfg.build_beam()
    grid = cfg.build_grid()
    mom = cfg.data["moments"]
    evaluators = mom.get("evaluators")
    regime = scaling.regime
    rows = []
    d = beam.d

    def wanted(name):
        return evaluators is None or name in evaluators

    for z in mom["z"]:
        for r in mom["r"]:
            rv = np.atleast_1d(np.asarray(r, float))
            for pair in mom["pairs"]:
                x = np.atleast_1d(np.asarray(pair[0], float))
                y = np.atleast_1d(np.asarray(pair[1], float))
                if x.size != d or y.size != d:
                    raise ConfigurationError(f"moment pair {pair!r} has wrong dimension")
                query = MomentQuery(float(z), rv, x, y)
                if wanted("mean-field"):
                    val = mean_field(beam, model, scaling, float(z), rv, x)
                    rows.append(_mrow(z, rv, x, x, val, "mean-field", regime))
                if wanted("second-moment"):
                    val = second_moment(beam, model, scaling, query)
                    rows.append(_mrow(z, rv, x, y, val, "second-moment", regime))
                if regime == "kinetic" and wanted("kinetic-limit"):
                    val = m11_limit_kinetic(beam, model, scaling, query, grid=grid)
                    name = ("kinetic-limit-centered" if beam.is_plane_wave_superposition
                            else "kinetic-limit")
                    rows.append(_mrow(z, rv, x, y, val, name, regime))
                if regime == "diffusive" and wanted("diffusive-limit"):
                    val = m11_limit_diffusive(beam, model, scaling, query, grid=grid,
                                              include_phase=True)
                    rows.append(_mrow(z, rv, x, y, val, "diffusive-limit-phase-on", regime))
                    val = m11_limit_diffusive(beam, model, scaling, query, grid=grid,
                                              include_phase=False)
                    rows.append(_mrow(z, rv, x, y, val, "diffusive-limit-phase-off", regime))

    writer = ManifestWriter(args.out, cfg.data)
    writer.csv("moments.csv",
               ["z", "r", "x", "y", "re", "im", "evaluator", "regime"], rows)
    if regime == "diffusive" and wanted("intensity-diffusion"):
        field = solve_I2(beam, model, [float(z) for z in mom["z"]], grid)
        writer.array("i2_profiles", field.values,
                     axes=["z"] + [f"r{i}" for i in range(grid.d)], units="intensity")
        writer.csv("i2_variance.csv", ["z", "mass", "axis_variance"],
                   [[zv, m, v] for zv, m, v in
                    zip(field.z_values, field.mass(), field.axis_variance())])
    writer.finalize()
    return 0


def _mrow(z, r, x, y, val, evaluator, regime):
    fmt = lambda v: " ".join(f"{c:.9g}" for c in np.atleast_1d(v))
    return [z, fmt(r), fmt(x), fmt(y), val.real, val.imag, evaluator, regime]


def cmd_verify(cfg: RunConfig, args) -> int:
    ver = cfg.data["verify"]
    in_dir = Path(ver["input"])
    manifest = read_manifest(in_dir)
    run_cfg = RunConfig.from_dict(manifest["config"])
    spec = run_cfg.build_ensemble_spec(seed_override=manifest["seed"])
    field_samples = read_array(in_dir / "field_samples")
    norms = read_array(in_dir / "norms")
    boundary = read_array(in_dir / "boundary_fractions")
    fields = None
    if (in_dir / "intensity_fields.bin").exists():
        fields = read_array(in_dir / "intensity_fields")
    stats = EnsembleStats(spec, field_samples, norms, boundary, fields)

    probe = int(ver.get("probe", 0))
    gap_probes = tuple(int(i) for i in ver.get("gap_probes", (0, min(1, len(spec.probes) - 1))))
    gap_max = float(ver.get("gap_max", 0.10))
    band = ver.get("scint_band", [0.85, 1.15])
    summary = []

    scint = scintillation_index(stats, [probe])[0]
    summary.append(["scintillation-index", scint.value, scint.se,
                    f"[{band[0]}, {band[1]}]", int(band[0] <= scint.value <= band[1])])

    law = exponential_law_test(stats.intensity_samples(probe))
    summary.append(["ks-exponential", law.ks_stat, 0.0,
                    f"< {law.ks_threshold:.5f}", int(law.ks_pass)])
    for p, (val, se) in law.ratios.items():
        ok = abs(val - 1.0) <= 4.0 * se
        summary.append([f"moment-ratio-p{p}", val, se, "1 within 4 se", int(ok)])

    gp = gaussianity_gap(stats, 2, 2, gap_probes + gap_probes)
    summary.append(["gaussianity-gap-mean", gp.gap, gp.gap_se, f"< {gap_max}",
                    int(gp.gap < gap_max)])
    summary.append(["gaussianity-gap-circular", gp.centered_gap, gp.centered_gap_se,
                    f"< {gap_max}", int(gp.centered_gap < gap_max)])

    writer = ManifestWriter(args.out, cfg.data, seed=manifest["seed"])

    if fields is not None:
        boxes = ver.get("box_cells", [1, 4, 16, 64])
        rep = self_average(fields, boxes, spec.grid.dx)
        writer.csv("self_average.csv",
                   ["box_cells", "box_length", "variance", "se"],
                   [[r.box_cells, r.box_length, r.variance, r.se] for r in rep.rows])
        summary.append(["self-average-monotone", float(len(rep.non_monotonic)), 0.0,
                        "no increases beyond error bars", int(rep.monotone)])

    intens = stats.intensity_samples(probe)
    edges = np.linspace(0.0, float(np.quantile(intens, 0.999)) * 1.5, 81)
    counts, _ = np.histogram(intens, bins=edges)
    mean_i = float(np.mean(intens))
    ref = (np.exp(-edges[:-1] / mean_i) - np.exp(-edges[1:] / mean_i)) * len(intens)
    writer.csv("intensity_hist.csv",
               ["bin_lo", "bin_hi", "count", "exponential_ref"],
               [[edges[i], edges[i + 1], counts[i], ref[i]] for i in range(len(counts))])

    writer.csv("verify_summary.csv",
               ["test", "statistic", "se", "threshold", "passed"], summary)
    writer.finalize()

    all_passed = all(bool(row[4]) for row in summary)
    expect_fail = bool(ver.get("expect_fail", False))
    for row in summary:
        print(f"{'PASS' if row[4] else 'FAIL'}  {row[0]}: {row[1]:.6g} (se {row[2]:.3g})")
    if expect_fail:
        print("negative-control mode: expecting failures")
        return 0 if not all_passed else 1
    return 0 if all_passed else 1


def cmd_moment_pde(cfg: RunConfig, args) -> int:
    model = cfg.build_model()
    base_scaling = cfg.build_scaling()
    mp = cfg.data["momentpde"]
    p, q = int(mp["p"]), int(mp["q"])
    if p + q > 4:
        raise ConfigurationError("moment-pde runs are scoped to p + q <= 4")
    n_v, extent, z = int(mp["n_v"]), float(mp["extent"]), float(mp["z"])
    width = float(mp.get("psi_width", 1.0))
    axis = (np.arange(n_v) - n_v // 2) * (extent / n_v)
    psi0 = separable_measure(np.exp(-axis**2 / (2.0 * width**2)), extent, p, q)
    tv0 = psi0.tv_norm()
    epsilons = [float(e) for e in mp.get("epsilons", [base_scaling.epsilon])]
    dz = mp.get("dz")
    writer = ManifestWriter(args.out, cfg.data)
    axes = [f"v{i}" for i in range(p + q)]
    rows = []
    any_invalid = False
    for eps in epsilons:
        scaling = dataclasses.replace(base_scaling, epsilon=eps)
        full = evolve_full(psi0, z, scaling, model, dz=None if dz is None else float(dz))
        gauss = evolve_gaussian_N(psi0, z, scaling, model, dz=None if dz is None else float(dz))
        diff = np.sum(np.abs(full.psi.values - gauss.values)) * psi0.cell_volume
        leak = full.leaked_fraction
        valid = leak <= 1e-6
        any_invalid = any_invalid or not valid
        rows.append([z, eps, scaling.eta, full.psi.tv_norm(), diff / tv0, leak, int(valid)])
        if mp.get("save_measures", False):
            tag = f"{eps:g}".replace(".", "p")
            meta = {"extent": extent, "p": p, "q": q, "z": z, "epsilon": eps}
            writer.array(f"psi_full_eps{tag}", full.psi.values, axes=axes,
                         units="dual density", extra_meta=meta)
            writer.array(f"psi_gaussian_eps{tag}", gauss.values, axes=axes,
                         units="dual density", extra_meta=meta)
    writer.csv("momentpde.csv",
               ["z", "epsilon", "eta", "tv_norm", "error_norm", "leaked_tv", "valid"],
               rows)
    if mp.get("bounds", True):
        deltas = [float(d) for d in mp.get("deltas", [1e-1, 1e-2, 1e-3, 1e-4])]
        lin = bound_check_linear(model, deltas)
        quad = bound_check_quadratic(model, deltas)
        writer.csv("bounds_linear.csv",
                   ["delta", "sup_value", "w0_value", "reference", "ratio"],
                   [[r.delta, r.sup_value, r.w0_value, r.reference, r.ratio] for r in lin])
        writer.csv("bounds_quadratic.csv",
                   ["delta", "sup_value", "w0_value", "reference", "ratio"],
                   [[r.delta, r.sup_value, r.w0_value, r.reference, r.ratio] for r in quad])
    writer.finalize()
    for row in rows:
        print(f"eps={row[1]}: error={row[4]:.6g} leaked={row[5]:.3g} valid={bool(row[6])}")
    if args.strict and any_invalid:
        print("check failed: leaked TV above threshold marks rows invalid", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
