/** Error taxonomy for the trainer. Every error names the artifact at fault. */

export class DlTrainerError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** A PNG could not be decoded (bad magic, CRC, or unsupported layout). */
export class CorruptImage extends DlTrainerError {}

/** The image tree or plan file does not form a usable dataset. */
export class DatasetError extends DlTrainerError {}

/** The configured pretrained-weights artifact is absent or unreadable. */
export class MissingWeights extends DlTrainerError {}

/** Training produced a non-finite loss. */
export class DivergedTraining extends DlTrainerError {}

/** A JSON document does not match its expected field set. */
export class SchemaMismatch extends DlTrainerError {}
