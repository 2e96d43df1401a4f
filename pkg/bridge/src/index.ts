export {
  BridgeError,
  StepServer,
  StepSession,
  type KeyState,
  type SessionOptions,
  type StepResult,
  type WatermarkConfig,
} from "./client.js";
