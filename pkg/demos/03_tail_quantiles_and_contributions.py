"""Tail quantiles of the aggregate loss and their allocation back to obligors.

Each obligor's contribution is its expected loss plus a variance-
proportional share of the unexpected loss, so contributions sum exactly to
the portfolio VaR at every level.

Run from the repository root:  python demos/03_tail_quantiles_and_contributions.py
"""

import agririsk as ar

LEVELS = [0.1, 0.05, 0.025, 0.01, 0.005, 0.0025, 0.001]

portfolio = ar.load_portfolio(ar.bundled_dataset_path())
sectored = ar.assign_sectors(portfolio, ar.SectorAssignment("crop-livestock"))
banded = ar.band_exposures(sectored, unit=1.0)
dist = ar.loss_dist_fft(banded, ar.auto_grid_size(banded))

mom = ar.moments(dist)
print(f"mean indemnity payment: {mom.mean:10.2f}")
print()
print("exceedance quantiles (million):")
for eps in LEVELS:
    print(f"  P(loss > q) <= {eps:<7} q = {ar.exceedance_quantile(dist, eps):10.0f}")
print()

table = ar.risk_contributions(banded, dist, [0.1, 0.05, 0.01], {o.id: o.name for o in portfolio})
print("risk contributions (million):")
print(f"  {'id':<5} {'expected':>10} {'at 0.1':>12} {'at 0.05':>12} {'at 0.01':>12}")
for row in sorted(table.rows, key=lambda r: r.contributions[-1], reverse=True)[:8]:
    c1, c2, c3 = row.contributions
    print(f"  {row.obligor_id:<5} {row.expected_loss:10.2f} {c1:12.2f} {c2:12.2f} {c3:12.2f}")
print("  ...")
print(
    f"  TOTAL {table.total_expected_loss:10.2f} "
    + " ".join(f"{t:12.2f}" for t in table.totals)
)
print()

for column, level in enumerate(table.levels):
    column_sum = sum(r.contributions[column] for r in table.rows)
    var_q = table.totals[column]
    print(f"additivity at {level}: sum {column_sum:.6f} == VaR {var_q:.6f}")
