use num_traits::Float;

use super::similarity::SimilarityMatrix;

pub const DEFAULT_TAU: f64 = 0.3;

fn average_distance<T: Float>(sim: &SimilarityMatrix<T>, a: &[usize], b: &[usize]) -> T {
    let mut total = T::zero();
    for &i in a {
        for &j in b {
            total = total + (T::one() - sim.get(i, j));
        }
    }
    total / T::from(a.len() * b.len()).unwrap()
}

/// Average-linkage clustering on `1 - sim`, merging while the closest pair
/// of clusters is at distance `<= tau`. Clusters come back sorted by their
/// smallest member; members are ascending.
pub fn hac_clusters<T: Float>(sim: &SimilarityMatrix<T>, tau: T) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..sim.n()).map(|i| vec![i]).collect();
    while clusters.len() > 1 {
        let mut best: Option<(T, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = average_distance(sim, &clusters[a], &clusters[b]);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (d, a, b) = best.expect("at least two clusters");
        if d > tau {
            break;
        }
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        clusters[a].sort_unstable();
    }
    clusters
}

/// Member with the highest mean similarity to the rest of `cluster`;
/// lowest index on ties.
pub fn medoid<T: Float>(sim: &SimilarityMatrix<T>, cluster: &[usize]) -> usize {
    let mut best: Option<(T, usize)> = None;
    for &i in cluster {
        let score = cluster
            .iter()
            .filter(|&&j| j != i)
            .fold(T::zero(), |acc, &j| acc + sim.get(i, j));
        if best.is_none_or(|(bs, bi)| score > bs || (score == bs && i < bi)) {
            best = Some((score, i));
        }
    }
    best.expect("non-empty cluster").1
}

/// Medoid of the largest cluster; size ties go to the cluster holding the
/// lowest index. `None` for an empty matrix.
pub fn hac_medoid_select<T: Float>(sim: &SimilarityMatrix<T>, tau: T) -> Option<usize> {
    let clusters = hac_clusters(sim, tau);
    let largest = clusters
        .iter()
        .min_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])))?;
    Some(medoid(sim, largest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau() -> f64 {
        DEFAULT_TAU
    }

    #[test]
    fn single_point() {
        let m = SimilarityMatrix::new(vec![vec![1.0]]).unwrap();
        assert_eq!(hac_medoid_select(&m, tau()), Some(0));
    }

    #[test]
    fn block_matrix() {
        let m = SimilarityMatrix::from_fn(4, |i, j| if i < 3 && j < 3 { 0.9 } else { 0.1 });
        // {0,1,2} merge at distance 0.1; {3} stays at 0.9 from all of them.
        assert_eq!(hac_clusters(&m, tau()), vec![vec![0, 1, 2], vec![3]]);
        assert_eq!(hac_medoid_select(&m, tau()), Some(0));
    }

    #[test]
    fn identical_matrix() {
        let m = SimilarityMatrix::from_fn(5, |_, _| 1.0);
        assert_eq!(hac_clusters(&m, tau()).len(), 1);
        assert_eq!(hac_medoid_select(&m, tau()), Some(0));
    }

    #[test]
    fn medoid_prefers_central_member() {
        // 2 is close to both 0 and 1, which are a bit further from each other.
        let s = [[1.0, 0.75, 0.95], [0.75, 1.0, 0.95], [0.95, 0.95, 1.0]];
        let m = SimilarityMatrix::from_fn(3, |i, j| s[i][j]);
        assert_eq!(hac_medoid_select(&m, tau()), Some(2));
    }

    #[test]
    fn size_ties_go_to_lowest_index() {
        let m = SimilarityMatrix::from_fn(4, |i, j| if (i < 2) == (j < 2) { 0.9 } else { 0.0 });
        assert_eq!(hac_clusters(&m, tau()), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(hac_medoid_select(&m, tau()), Some(0));
    }
}
