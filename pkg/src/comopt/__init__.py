"""Co-optimization of moving parts: stiffness + collision avoidance."""

from .collision import (CollisionReport, CollisionWeightMatrix,
                        aggregate_collision, assemble_cwm, collision_gradient,
                        collision_measure, collision_sensitivity,
                        oracle_collision, read_cwm, write_cwm)
from .config import (ConfigError, RunConfig, build_assembly, parse_config,
                     parse_config_dict, write_config)
from .fea import (BoundaryConditions, FEASolution, Material,
                  assemble_and_solve, recover_centroid_state, resolve_node)
from .grid import (ElementField, UniformGrid, VertexField, element_to_vertex,
                   extract_level_set, read_field_text, volume_fraction,
                   write_field_pgm, write_field_text)
from .motion import (FollowerTrajectory, KeyframeTrajectory,
                     RelativeTrajectory, RigidTransform, RotationTrajectory,
                     StaticTrajectory, follower_height, sample_uniform)
from .optimizer import (Assembly, OptimizationTrace, OptimizerSettings, Part,
                        co_design, find_threshold)
from .scenarios import builtin_scenario
from .sensitivity import augment, compliance_tsf, normalize, tsf_value

__version__ = "0.1.0"
