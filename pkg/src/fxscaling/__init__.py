"""Fluctuation scaling and cross-correlation analysis of market activity counts."""

__version__ = "0.1.0"

from .errors import (BootstrapDegeneracyError, CoverageError, DegenerateError, EmptyPlanError,
                     EmptyStreamError, FxScalingError, GeometryError, InsufficientDataError,
                     OrderingError, ParseError, SelectionError, SpecError)
from .moments import (CorrSummary, LaggedCov, PDCorrSummary, corr_matrix, global_avg_corr,
                      lagged_cov, lagged_cov_matrix, mean, pd_corr)
from .panel import (ActivityPanel, WindowPlan, bin_counts, plan_weeks, read_panel, rebin,
                    write_panel_csv)
from .scaling import (BootstrapResult, ScalingFit, bootstrap_moments, bootstrap_scaling,
                      fit_scaling)
from .studies import (RegressionResult, RollingConfig, RollingReport, SweepCurve,
                      alpha_corr_regression, dt_sweep, pd_lag_profile, rolling_weekly)
from .synthgen import GenSpec, analytic_moments, gen_panel, gen_tick_stream
from .tickdata import (Interval, Kind, OrderPolicy, TickEvent, TickStream, filter_pairs,
                       parse_tick_file, write_tick_csv)
