"""Embedding quality: class-separation fitness, sweeps and cross-validated classifiers."""

from .classifiers import (
    CLASSIFIERS,
    BaggedTrees,
    DecisionTree,
    GaussianNaiveBayes,
    KNeighbors,
    LinearDiscriminant,
    LinearSVM,
    bagging_classify,
    knn_classify,
    lda_classify,
    make_classifier,
    naive_bayes_classify,
    svm_classify,
)
from .crossval import CvReport, repeated_kfold, stratified_folds
from .fitness import FitnessReport, fitness
from .sweep import SweepGrid, default_axis, sweep_fitness

__all__ = [
    "CLASSIFIERS", "BaggedTrees", "DecisionTree", "GaussianNaiveBayes", "KNeighbors",
    "LinearDiscriminant", "LinearSVM", "bagging_classify", "knn_classify", "lda_classify",
    "make_classifier", "naive_bayes_classify", "svm_classify", "CvReport", "repeated_kfold",
    "stratified_folds", "FitnessReport", "fitness", "SweepGrid", "default_axis", "sweep_fitness",
]
