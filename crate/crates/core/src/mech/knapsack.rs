use crate::real::Real;

fn by_ratio<T: Real>(values: &[T], prices: &[T], set: &[usize]) -> Vec<usize> {
    let mut items = set.to_vec();
    let key = |i: usize| {
        if prices[i] > T::zero() {
            values[i] / prices[i]
        } else {
            T::infinity()
        }
    };
    items.sort_by(|&a, &b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    items
}

/// Greedy packing of `set` by decreasing `v_i / p_i`; the first item that
/// does not fit contributes the fraction of its value that the leftover
/// budget pays for.
pub fn fractional_knapsack_value<T: Real>(
    values: &[T],
    prices: &[T],
    budget: T,
    set: &[usize],
) -> T {
    let mut used = T::zero();
    let mut total = T::zero();
    for i in by_ratio(values, prices, set) {
        if used + prices[i] <= budget {
            used = used + prices[i];
            total = total + values[i];
        } else {
            let room = (budget - used).max(T::zero());
            return total + values[i] * room / prices[i];
        }
    }
    total
}

/// The fitting prefix of the greedy packing; stops at the first item that
/// does not fit.
pub fn integral_knapsack_value<T: Real>(values: &[T], prices: &[T], budget: T, set: &[usize]) -> T {
    let mut used = T::zero();
    let mut total = T::zero();
    for i in by_ratio(values, prices, set) {
        if used + prices[i] > budget {
            break;
        }
        used = used + prices[i];
        total = total + values[i];
    }
    total
}
