/// Numerical thresholds shared by every pruning path.
///
/// All variants must use the same values: they decide membership in a
/// parsimonious covering, and two variants that disagree on a threshold can
/// disagree on a borderline vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// An LP slack value above this counts as positive.
    pub positive: f64,
    /// Inner products within this of each other are ties.
    pub tie: f64,
    /// A tie program whose optimum exceeds `-neighbor` certifies a shared
    /// facet. Erring toward "neighbor" only costs LP rows.
    pub neighbor: f64,
    /// Relative residual bound for the collinearity test on difference vectors.
    pub collinear: f64,
    /// Observation tables closer than this entrywise are treated as equal.
    pub table_equality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            positive: 1e-7,
            tie: 1e-9,
            neighbor: 1e-7,
            collinear: 1e-7,
            table_equality: 1e-12,
        }
    }
}
