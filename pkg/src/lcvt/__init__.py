"""Lasso-based coefficient-of-variation test for heteroskedasticity.

Quick use::

    from lcvt import DataMatrix, RngState, lcvt_test
    res = lcvt_test(DataMatrix(X, y), rng=RngState(0))
    res.z, res.p_value, res.reject
"""

from .errors import (AllZeroResiduals, CampaignAborted, ConfigError, DataError,
                     DegenerateDesign, LcvtError, MaxItersExceeded, NumericalError,
                     ParseError, SingularDesign)
from .hetero import (TestResult, cvt_statistic, lcvt_test, ols_cvt_statistic, ols_test,
                     residual_summary, studentize)
from .lasso import (CvResult, LambdaPath, LassoConfig, LassoFit, compute_lambda_path,
                    cross_validate, fit_lasso, fit_lcvt_lasso, fit_ols, kkt_certificate)
from .numerics import DataMatrix, RngState, cholesky, sample_mvn
from .simulation import (CoefficientSpec, CovarianceSpec, RejectionReport, ScenarioSpec,
                         calibrate_tau, generate_dataset, run_augmentation, run_campaign)

__version__ = "0.1.0"
