"""
Pruning mixed-type categories out of the network
================================================

Category networks mix two kinds of grouping: taxonomic ("towns in
Santa Clara County" contains towns) and associative ("Stanford
University" contains a town, people, lists, buildings). Associative
categories poison count-based recommendations because their member
sections have nothing in common.

The filter scores every category by the Gini coefficient of its
closure's entity-type histogram and drops the impure ones bottom-up,
so a dropped category's mass never contaminates its ancestors.
"""
from sectionrec.catgraph import CategoryGraph, TypeMap, closure_members, gini, prune

graph = CategoryGraph(
    names={
        10: "Populated places in California",
        11: "University towns",
        12: "Towns in Santa Clara County",
        13: "Stanford University",
    },
    edges=[(11, 10), (12, 10), (13, 10)],  # child -> parent
    memberships={
        1: {11, 13},   # Stanford, California        (town)
        2: {12},       # Fruitdale, California       (town)
        3: {12},       # Loyola, California          (town)
        4: {13},       # List of Stanford alumni     (list)
        5: {13},       # Leland Stanford             (person)
        6: {13},       # Stanford Medical Center     (building)
    },
    root=10,
)
types = TypeMap(
    types={1: 0, 2: 0, 3: 0, 4: 1, 5: 2, 6: 3},
    universe=("town", "list", "person", "building")
    + tuple(f"type{i:02d}" for i in range(4, 55)),
)

# a category of three towns concentrates all mass in one of 55 type bins;
# the university spreads it over four
print("purity of a pure category: ", gini([3, 0, 0, 0] + [0] * 51))
print("purity of the mixed one:   ", gini([1, 1, 1, 1] + [0] * 51))

pruned = prune(graph, types, threshold=0.966)
print("\nremoved:  ", sorted(graph.names[c] for c in pruned.removed))
print("survived: ", sorted(graph.names[c] for c in pruned.survivors))

# with the university gone, the base category closes over towns only
towns = closure_members(pruned.graph, 10)
print("closure of the base category:", sorted(towns))
