"""
Three ways to find competitors
==============================

Cluster the same panel by native category, by 14 extracted series
features, and by DTW distances with barycenter centroids, then compare
the assignments with contingency tables and the adjusted Rand index.
"""

import numpy as np

from cpcast.cluster import (category_clusters, compare_assignments,
                            distance_clusters, extracted_clusters)
from cpcast.simgen import MarketConfig, simulate

panel, truth = simulate(MarketConfig(n_advertisers=20, n_clusters=4, n_days=1100, seed=7))

by_category = category_clusters(panel)
by_features = extracted_clusters(panel, seed=0)
by_distance = distance_clusters(panel, seed=0)

print(f"category route:  k={by_category.k}")
print(f"extracted route: k={by_features.k} (elbow over WCSS curve)")
print(f"distance route:  k={by_distance.k} (elbow over DTW-medoid WCSS curve)")

# how well does each route recover the planted structure?
from cpcast.cluster import ClusterAssignment
planted = ClusterAssignment("distance", 4, dict(truth.cluster_of))
for name, assignment in [("category", by_category), ("extracted", by_features),
                         ("distance", by_distance)]:
    ari = compare_assignments(assignment, planted)["ari"]
    print(f"  {name:9s} vs planted truth: ARI = {ari:.3f}")

# the contingency table behind the cluster-flow diagram
comparison = compare_assignments(by_distance, by_category)
print("\ndistance vs category contingency (rows = distance clusters):")
print(comparison["contingency"])
print(f"ARI = {comparison['ari']:.3f}")
