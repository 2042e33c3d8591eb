"""
How much does the vehicle-selection heuristic cost?
===================================================

Each new request normally builds bundles with every vehicle that can reach
it in time.  The three rules cap that at chi_a + chi_ud + chi_un vehicles.
This runs the 20-vehicle desk scenario once without the cap and with a few
tuples, then tabulates served share, rsd and the speed-up of the bundle
build phase relative to the uncapped run.

Every run leaves kpi.csv, timings.csv, events.csv and requests.csv under
demos/out/, so the same table is available from the command line::

    odrp compare --ref demos/out/off/kpi.csv demos/out/*/kpi.csv
"""

from dataclasses import replace
from pathlib import Path

from odrp import ScenarioConfig, compare_report, run_scenario
from odrp.metrics import format_table
from odrp.vehicle_filter import FilterParams

here = Path(__file__).parent
cfg = ScenarioConfig.load(here / "configs" / "desk_fleet.cfg")
out = here / "out"

runs = {"off": None, "8-4-4": FilterParams(8, 4, 4), "6-3-3": FilterParams(6, 3, 3),
        "4-2-2": FilterParams(4, 2, 2)}
reports = {}
for name, chi in runs.items():
    report, sim = run_scenario(replace(cfg, heuristic=chi), out / name, name)
    reports[name] = report
    sizes = sim.policy.filter_sizes
    extra = f", mean |V_build| {sum(sizes) / len(sizes):.1f}" if sizes else ""
    print(f"{name:6s} done: {report.n_served}/{report.n_requests} served{extra}")

###############################################################################
# Served share barely moves; the build phase gets several times faster.

print()
print(format_table(compare_report([out / n / "kpi.csv" for n in runs], ref=out / "off" / "kpi.csv")))

###############################################################################
# Per-step phase times are in timings.csv.  The compatibility checks do not
# depend on the cap, the build phase does.

print()
print("run     phase     mean ms   p95 ms")
for name, report in reports.items():
    for phase, (mean, p95) in report.phase_stats().items():
        print(f"{name:6s}  {phase:8s} {1e3 * mean:8.1f} {1e3 * p95:8.1f}")
