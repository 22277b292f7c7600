"""
Where the work goes in a Golomb ruler search
============================================

Node counts under each position of the first mark after zero, for 9 marks
and length 44.
Small first gaps leave much more room for the remaining marks.
"""

from stealcsp import build_golomb, run_in_process

report = run_in_process(build_golomb(9, 44), 1, 1)
nodes = report.stats.subtree_nodes
total = sum(nodes.values())

print(f"{report.count} rulers, {total} nodes, {report.time_s:.1f}s")
for first_mark in sorted(nodes):
    share = 100 * nodes[first_mark] / total
    print(f"{first_mark:3d} {share:5.1f}% " + "#" * round(share))
