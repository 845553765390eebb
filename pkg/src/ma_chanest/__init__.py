"""Wideband channel estimation for movable-antenna links.

Simulation of a point-to-point OFDM link where both antennas can move in
planar regions: multipath scene generation, three-step pilot measurements,
grid-based sparse recovery of angles and delays, least-squares gain
estimation, gradient refinement, and NMSE/rate evaluation.
"""

from .channel import (ChannelScene, PathResponseTensor, Position, Region,
                      VirtualAngle, cfr, cfr_block, devectorize_x, drv,
                      drv_matrix, frv, frv_matrix, matricize_prt,
                      virtual_from_physical)
from .experiment import (ExperimentConfig, run_sweep, run_trial,
                         write_aggregate_csv, write_raw_csv)
from .metrics import GridSpec, achievable_rate, fpa_rate, nmse
from .pilots import (MeasurementPlan, PilotGrid, PilotObservation, build_plan,
                     gen_positions, synthesize_pilots)
from .prt_ls import (EstimatedMpcs, build_dmat, build_psi, ls_estimate_x,
                     reconstruct_cfr, reconstruct_cfr_grid, somp_pipeline)
from .refine import RefineConfig, RefineProblem, objective, refine
from .scene import SceneConfig, sample_scene, snap_scene_to_grids
from .somp import (AngleGrid, DelayGrid, SompResult, build_angle_dictionary,
                   build_delay_dictionary, decode_angle_index,
                   estimate_angles_delays, somp)

__all__ = [name for name in dir() if not name.startswith("_")]
