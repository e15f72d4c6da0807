/** Expected post-conversion statistics per dataset, used as hard gates. */

export interface DatasetDescriptor {
  name: string;
  nodes: number;
  /** published edge count; the counting convention is recorded, not assumed */
  edges: number;
  classes: number;
  homophily: number;
  /** feature column stores active indices into a fixed-width binary vector */
  indexFeatures?: number;
  /** divide each feature row by its sum (citation-network convention) */
  rowNormalize?: boolean;
  /** published class count known to disagree with the source distribution */
  swappedClassCount?: number;
}

export const DESCRIPTORS: Record<string, DatasetDescriptor> = {
  texas: { name: "texas", nodes: 183, edges: 295, classes: 5, homophily: 0.11 },
  film: { name: "film", nodes: 7600, edges: 26752, classes: 5, homophily: 0.22, indexFeatures: 932 },
  citeseer: {
    name: "citeseer",
    nodes: 3327,
    edges: 4676,
    classes: 7,
    homophily: 0.74,
    rowNormalize: true,
    swappedClassCount: 6,
  },
  cora: {
    name: "cora",
    nodes: 2708,
    edges: 5278,
    classes: 6,
    homophily: 0.81,
    rowNormalize: true,
    swappedClassCount: 7,
  },
};
