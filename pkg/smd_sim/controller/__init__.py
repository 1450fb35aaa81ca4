from .nack import NackLedger
from .policy import DivergencePolicy
from .refresh import BaselineRefresh, ControllerPara, ControllerScrub
from .request import MemRequest, RequestKind
from .scheduler import BASELINE_REFRESH_MODES, ControllerConfig, MemoryController
