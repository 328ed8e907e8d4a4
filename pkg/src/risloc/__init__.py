"""RIS-assisted wireless fingerprint localization."""
from ._accel import USE_NUMBA, backend_name
from .channel import (
    ChannelModel,
    LoadCodebook,
    RisArray,
    RisConfiguration,
    Scenario,
    SingularConfigurationError,
    build_ris_array,
    coupling_matrix,
    end_to_end_channel,
    reflection_matrix,
    rssi_sample,
    transfer_vector,
)
from .em import (
    DomainError,
    Dipole,
    Wave,
    cosine_integral,
    farfield_transfer_impedance,
    mutual_impedance_parallel,
    self_impedance,
    sine_integral,
)
from .localization import (
    Estimate,
    RssiVector,
    evaluate,
    knn_localize,
    pearson,
    permuted_pearson_localize,
)
from .radiomap import (
    ConfigurationSet,
    LocationSplit,
    RadioMap,
    ReferenceGrid,
    build_radio_map,
    generate_configuration_set,
    load_radio_map,
    make_grid,
    restrict,
    save_radio_map,
    split_locations,
)
from .selection import (
    GaParams,
    SelectionResult,
    dissimilarity,
    ga_feature_select,
    hss_exhaustive,
    hss_greedy,
    random_select,
)

__version__ = "0.1.0"
