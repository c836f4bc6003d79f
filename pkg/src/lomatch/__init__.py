"""Instance matching and hybrid recommendation for learning-object repositories."""

from .bayes import NaiveBayesModel, classify_nb, fit_naive_bayes, posterior
from .collective import collective_refine
from .evaluation import (
    ConfusionMatrix,
    MetricsReport,
    confusion_matrix,
    f_score,
    kfold_cv,
    prf_metrics,
    reported_metrics_consistent,
)
from .fuzzy import (
    FcmState,
    TriangularMF,
    fcm_cluster,
    fcm_memberships,
    fcm_update_centers,
    fuzzify_class_labels,
    triangular_membership,
)
from .matcher import (
    GaussianClusterModel,
    MatchDecision,
    MatcherConfig,
    ValidationReport,
    ambiguity_reassign,
    assign_and_membership,
    classes_to_clusters,
    cluster_scores,
    init_cluster_stats,
    match_pipeline,
    swap_validate,
)
from .records import (
    MATCH,
    NON_MATCH,
    InstancePair,
    LearningObjectRecord,
    Ontology,
    generate_candidate_pairs,
    normalize_record,
    parse_repository,
)
from .recommender import (
    RatingMatrix,
    Recommendation,
    build_content_profile,
    pearson_user_similarity,
    predict_rating_cf,
    recommend_hybrid,
    score_content,
)
from .similarity import (
    FeatureVector,
    edit_similarity,
    extract_features,
    tf_cosine_similarity,
    token_set_similarity,
)

__version__ = "0.1.0"
