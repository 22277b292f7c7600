"""
Even and eager partitioning
===========================

Three variables over {a, b, c}, cut into six pieces both ways.
"""

from stealcsp import domain_range, domain_values, eager_split, even_split, verify_partition

letters = "abc"
store = (domain_range(0, 2),) * 3


def show(parts):
    for p in parts:
        print("  ", " ".join("{" + ",".join(letters[v] for v in domain_values(d)) + "}" for d in p))


# even: one domain cut into near-equal runs; only three values, so k=3
print("even, k=3")
show(even_split(store, 3))

# eager: breadth first, so most pieces start with a fixed prefix
print("eager, k=6")
parts = eager_split(6, [store])
show(parts)
print("disjoint and covering:", verify_partition(store, parts))
