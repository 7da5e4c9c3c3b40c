"""Cell-free massive MIMO ISAC simulator and optimization toolkit."""

from .model import (AllocationState, ConfigError, NetworkConfig,
                    NetworkRealization, aod_angle, draw_realization,
                    load_network_config, noise_power, pathloss_beta,
                    wrap_distance)
from .channel import ChannelRealization, array_response, draw_channels, mmse_gamma
from .precoding import (Grouping, PrecoderSet, build_precoders, zf_outer_product_oracle,
                        mrt_precoder, pzf_grouping, zf_precoders)
from .metrics import (DerivedCoefficients, SeReport, beampattern_com,
                      beampattern_sen, derive_coefficients, evaluate, masr,
                      mc_beampattern_oracle, mc_sinr_oracle, se_from_sinr,
                      sinr_closed_form)
from .conic import (ConeBlock, ConicProgram, ConicSolution, dump_program,
                    parse_program, solve_conic, validate_program)
from .optimize import (ScaState, SchemeResult, equal_power, gap_opa,
                       greedy_ap_selection, jap_opa, pa_fixed_modes, rap_opa)

__version__ = "0.1.0"
