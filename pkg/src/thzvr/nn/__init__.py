from .gradcheck import GradCheckReport, grad_check
from .losses import cross_entropy, mse
from .models import GruRegressor, LstmClassifier, MlpNet, SceneCnn
from .optim import AdamOptimizer, SgdOptimizer
from .params import ParameterTree

__all__ = [
    "AdamOptimizer", "GradCheckReport", "GruRegressor", "LstmClassifier",
    "MlpNet", "ParameterTree", "SceneCnn", "SgdOptimizer", "cross_entropy",
    "grad_check", "mse",
]
