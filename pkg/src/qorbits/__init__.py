"""q-orbits of closed geodesics on modular curves: double coset embeddings,
coset exponential sums, Eisenstein pairings and homology concentration."""

from .charsums import (CosetSpec, DirichletCharacter, characters, coset_kloosterman, gauss_sum,
                       kloosterman, unit_group)
from .eisenstein import (E2Level, E2Star, EtaSquaredLevel11, UserSupplied, birch_stevens_cuspform_consistency,
                         birch_stevens_eisenstein, dedekind_sum, dirichlet_L, eisenstein_pairing, local_weight,
                         modular_symbol, rademacher_phi)
from .harness import ExperimentConfig, geodesic_integral, haar_integral, reduce_level1, run_experiment
from .homology import (concentration_distance, corollary_check, gamma0_decompose, homology_class,
                       orbit_sum, psl2z_decompose, schreier_generators)
from .modgroup import (EmbeddingSpec, UnimodularMatrix, embed, geodesic_data, geodesic_point,
                       minimal_trace, normalize, orbit)
from .torusstats import TorusObservable, smooth_step, torus_sum, trace_stats

__version__ = "0.1.0"
