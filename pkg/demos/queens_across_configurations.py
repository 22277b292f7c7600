"""
Counting queens with teams of workers
=====================================

The solution count must not depend on how the search is spread out.
"""

from stealcsp import build_queens, run_in_process

problem = build_queens(8)

# one team of one worker is the plain sequential solver
for teams, workers in [(1, 1), (1, 4), (2, 2), (4, 1)]:
    report = run_in_process(problem, teams, workers)
    stats = report.stats
    print(f"{teams}x{workers}: {report.count} solutions, {stats.nodes} nodes, "
          f"{stats.steals_succeeded} steals, {report.supplies} inter-team supplies")
