"""Random Forest proximities, Self-Organising Maps and RF-SOM.

A SOM normally finds its best matching unit by Euclidean distance. RF-SOM
finds it by Random Forest dissimilarity instead, i.e. by how rarely a
sample and a neuron's weight vector land in the same leaf.
"""

from .dataset import (Dataset, DatasetError, FoldSplit, NormalizationParams,
                      apply_normalization, fit_minmax, load_csv, stratified_folds)
from .forest import (DecisionTree, ProximityMatrix, RandomForest, dissimilarity_row,
                     information_gain, leaf_ids, predict, proximity_matrix, train_forest)
from .mds import Embedding2D, classical_mds, euclidean_distance_matrix, symmetric_eigen
from .rfsom import RfSomModel, build_rfsom_classifier, find_bmu_rf, train_rfsom
from .som import (LabeledSom, SomGrid, SomHyperParams, classify, find_bmu_euclidean,
                  init_grid, label_som, learning_rate, neighbourhood, neighbourhood_width,
                  squared_euclidean, train_som, update_weights)

__version__ = "0.1.0"
