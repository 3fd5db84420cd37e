use super::BusError;

/// Fastest loop over `n_motors` when each needs one write and one read, Hz.
pub fn motor_bus_budget(n_motors: u32, t_write: f64, t_read: f64) -> Result<f64, BusError> {
    if n_motors == 0 || !(t_write > 0.0) || !(t_read > 0.0) {
        return Err(BusError::Config("motor count and timings must be positive".into()));
    }
    Ok(1.0 / (n_motors as f64 * (t_write + t_read)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets() {
        let b16 = motor_bus_budget(16, 2e-6, 0.3e-3).unwrap();
        assert!((b16 - 1.0 / (16.0 * 302e-6)).abs() < 1e-9);
        assert!((b16 - 206.95).abs() < 0.01);
        assert!(b16 >= 99.9);
        let b1 = motor_bus_budget(1, 2e-6, 0.3e-3).unwrap();
        assert!((b1 - 3311.26).abs() < 0.01);
        assert!(motor_bus_budget(0, 1.0, 1.0).is_err());
    }
}
